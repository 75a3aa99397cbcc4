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

#include "massim/correlation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace massim
{

ArrayGeometry build_geometry(arma::uword m_per_cluster, double side_length, double carrier_freq)
{
    if (m_per_cluster < 2 || m_per_cluster % 2 != 0)
        throw std::invalid_argument("build_geometry: antenna count per cluster must be even and >= 2, got " +
                                    std::to_string(m_per_cluster));
    if (side_length <= 0.0)
        throw std::invalid_argument("build_geometry: side_length must be positive");
    if (carrier_freq <= 0.0)
        throw std::invalid_argument("build_geometry: carrier_freq must be positive");

    const arma::uword n_pairs = m_per_cluster / 2;
    const arma::uword rows = static_cast<arma::uword>(std::floor(std::sqrt(static_cast<double>(n_pairs))));
    const arma::uword cols = (n_pairs + rows - 1) / rows; // ceil(n_pairs / rows)

    const double dx = cols > 1 ? side_length / static_cast<double>(cols - 1) : 0.0;
    const double dy = rows > 1 ? side_length / static_cast<double>(rows - 1) : 0.0;
    const arma::uword full_rows = n_pairs / cols;

    ArrayGeometry geom;
    geom.side_length = side_length;
    geom.carrier_freq = carrier_freq;
    geom.wavelength = 299792458.0 / carrier_freq;
    geom.pair_positions.set_size(n_pairs, 2);

    arma::uword written = 0;
    for (arma::uword i = 0; i < rows && written < n_pairs; i++)
    {
        const arma::uword in_row = i < full_rows ? cols : n_pairs - full_rows * cols;
        if (in_row == 0)
            break;
        const double y = rows > 1 ? static_cast<double>(i) * dy : side_length / 2.0;
        // A partial last row is centered so the grid stays symmetric about the square's midline
        const double x0 = in_row < cols ? (side_length - static_cast<double>(in_row - 1) * dx) / 2.0 : 0.0;
        for (arma::uword j = 0; j < in_row; j++)
        {
            geom.pair_positions(written, 0) = cols > 1 ? x0 + static_cast<double>(j) * dx : side_length / 2.0;
            geom.pair_positions(written, 1) = y;
            written++;
        }
    }
    if (written != n_pairs)
        throw std::runtime_error("build_geometry: internal grid fill mismatch");

    return geom;
}

double exp_correlation(double a, double d)
{
    if (a <= 0.0)
        throw std::invalid_argument("exp_correlation: base a must be positive, got " + std::to_string(a));
    if (d < 0.0)
        throw std::invalid_argument("exp_correlation: distance must be nonnegative");
    return std::pow(a, -d);
}

TransmitCorrelation build_rt(const ArrayGeometry &geom, double a, double r_pol)
{
    if (r_pol < 0.0 || r_pol >= 1.0)
        throw std::invalid_argument("build_rt: r_pol must lie in [0, 1), got " + std::to_string(r_pol));
    if (a <= 0.0)
        throw std::invalid_argument("build_rt: base a must be positive");
    if (geom.pair_positions.n_rows == 0 || geom.wavelength <= 0.0)
        throw std::invalid_argument("build_rt: geometry is empty or lacks a wavelength");

    const arma::uword n_pairs = geom.pair_positions.n_rows;
    const arma::uword m = 2 * n_pairs;

    arma::mat pair_corr(n_pairs, n_pairs);
    for (arma::uword i = 0; i < n_pairs; i++)
    {
        pair_corr(i, i) = 1.0;
        for (arma::uword j = i + 1; j < n_pairs; j++)
        {
            const double ddx = geom.pair_positions(i, 0) - geom.pair_positions(j, 0);
            const double ddy = geom.pair_positions(i, 1) - geom.pair_positions(j, 1);
            const double dist_wl = std::sqrt(ddx * ddx + ddy * ddy) / geom.wavelength;
            const double rho = exp_correlation(a, dist_wl);
            pair_corr(i, j) = rho;
            pair_corr(j, i) = rho;
        }
    }

    const arma::mat x_pol = {{1.0, r_pol}, {r_pol, 1.0}};

    TransmitCorrelation corr;
    corr.matrix = arma::kron(pair_corr, x_pol);
    corr.is_identity = false;

    arma::vec eigval;
    arma::mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, corr.matrix))
        throw std::runtime_error("build_rt: eigen-decomposition failed for m = " + std::to_string(m));

    const double most_negative = eigval.min();
    if (most_negative < -1e-8)
        throw std::runtime_error("build_rt: correlation matrix is indefinite, most negative eigenvalue = " +
                                 std::to_string(most_negative) + " (a = " + std::to_string(a) +
                                 ", r_pol = " + std::to_string(r_pol) + ", m = " + std::to_string(m) + ")");
    const bool clamped = most_negative < 0.0;
    eigval.transform([](double v) { return v < 0.0 ? 0.0 : v; });

    corr.eigenvalues = eigval;
    corr.eigenvectors = eigvec;
    if (clamped)
        corr.matrix = eigvec * arma::diagmat(eigval) * eigvec.t();
    corr.sqrt_matrix = eigvec * arma::diagmat(arma::sqrt(eigval)) * eigvec.t();
    corr.sqrt_matrix = 0.5 * (corr.sqrt_matrix + corr.sqrt_matrix.t());

    return corr;
}

TransmitCorrelation identity_correlation(arma::uword m_per_cluster)
{
    if (m_per_cluster < 1)
        throw std::invalid_argument("identity_correlation: size must be >= 1");
    TransmitCorrelation corr;
    corr.matrix = arma::eye(m_per_cluster, m_per_cluster);
    corr.eigenvalues = arma::ones(m_per_cluster);
    corr.eigenvectors = arma::eye(m_per_cluster, m_per_cluster);
    corr.sqrt_matrix = corr.matrix;
    corr.is_identity = true;
    return corr;
}

double lambda_bar_sq(const TransmitCorrelation &corr)
{
    if (corr.is_identity)
        return 1.0;
    if (corr.eigenvalues.n_elem == 0)
        throw std::invalid_argument("lambda_bar_sq: eigenvalues not available");
    return arma::mean(arma::square(corr.eigenvalues));
}

static void write_csv_matrix(const std::string &path, const arma::mat &m)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    char buf[32];
    for (arma::uword i = 0; i < m.n_rows; i++)
    {
        for (arma::uword j = 0; j < m.n_cols; j++)
        {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << (j + 1 < m.n_cols ? "," : "");
        }
        out << "\n";
    }
}

void dump_correlation_csv(const TransmitCorrelation &corr, const std::string &matrix_path,
                          const std::string &eigenvalue_path)
{
    write_csv_matrix(matrix_path, corr.matrix);
    write_csv_matrix(eigenvalue_path, arma::mat(corr.eigenvalues).t());
}

} // namespace massim
