// SPDX-License-Identifier: Apache-2.0
//
// massim - link-gain and SINR simulation for distributed massive MIMO downlink precoding
// Copyright (C) 2026 massim contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef massim_correlation_H
#define massim_correlation_H

#include <armadillo>
#include <string>

namespace massim
{

// Physical layout of one cluster's antenna panel: cross-polarized element pairs
// placed on a uniform grid inside a square.
struct ArrayGeometry
{
    double side_length = 1.0;          // Square side in meters
    double carrier_freq = 2.6e9;       // Carrier frequency in Hz
    double wavelength = 0.0;           // Derived, c / carrier_freq, meters
    arma::mat pair_positions;          // Pair coordinates in meters, size [n_pairs, 2]
};

// Transmit-side spatial correlation of one cluster, with cached spectral data.
// All clusters share the same matrix (identical panels).
struct TransmitCorrelation
{
    arma::mat matrix;                  // Symmetric, unit diagonal, size [m, m] with m = antennas per cluster
    arma::vec eigenvalues;             // Ascending, clamped to >= 0, length m
    arma::mat eigenvectors;            // Orthonormal columns matching eigenvalues
    arma::mat sqrt_matrix;             // Symmetric PSD square root of matrix
    bool is_identity = false;          // True for the uncorrelated fast path

    arma::uword dim() const { return matrix.n_rows; }
};

// Places m_per_cluster / 2 cross-pol pairs on a uniform grid spanning the square.
// When the pair count is not a perfect square, an r x c grid with r = floor(sqrt(P)),
// c = ceil(P / r) is filled row-major and the final partial row is centered.
// Throws std::invalid_argument for an odd antenna count or non-positive inputs.
ArrayGeometry build_geometry(arma::uword m_per_cluster, double side_length, double carrier_freq);

// Exponential correlation coefficient a^(-d) for a pair distance of d wavelengths.
// Throws std::invalid_argument for a <= 0 or d < 0.
double exp_correlation(double a, double d);

// Assembles the cluster correlation matrix: block (i,j) equals a^(-d_ij) * X_pol with
// d_ij the pair distance in wavelengths and X_pol = [[1, r_pol], [r_pol, 1]].
// Eigenvalues in [-1e-8, 0) are clamped to zero and the matrix is rebuilt; anything
// more negative throws std::runtime_error reporting the offending eigenvalue.
// Throws std::invalid_argument for r_pol outside [0, 1) or a <= 0.
TransmitCorrelation build_rt(const ArrayGeometry &geom, double a, double r_pol);

// Uncorrelated case: identity correlation of the given per-cluster size.
TransmitCorrelation identity_correlation(arma::uword m_per_cluster);

// Average of the squared eigenvalues, (N/M) * sum(lambda^2). Equals 1 only for the
// identity and grows toward m for a fully correlated cluster.
double lambda_bar_sq(const TransmitCorrelation &corr);

// Dumps the correlation matrix (row-major) and its eigenvalues as full-precision CSV.
void dump_correlation_csv(const TransmitCorrelation &corr, const std::string &matrix_path,
                          const std::string &eigenvalue_path);

} // namespace massim

#endif
