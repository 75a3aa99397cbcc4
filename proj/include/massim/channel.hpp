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

#ifndef massim_channel_H
#define massim_channel_H

#include "massim/correlation.hpp"
#include "massim/linkgain.hpp"

#include <armadillo>
#include <random>

namespace massim
{

// True channel and its CSI estimate for one fading realization.
struct ChannelPair
{
    arma::cx_mat g;      // True channel, size [M, K]
    arma::cx_mat g_hat;  // CSI estimate, size [M, K]
    double xi = 1.0;     // CSI accuracy in [0, 1]; 1 means g_hat == g
};

// Per-user composite gain: the block-diagonal gain matrix of user i is never
// materialized; its blocks are beta_{n,i} times the shared cluster correlation.
struct UserGainSpectrum
{
    arma::vec cluster_gains;   // beta_{n,i} over clusters, length N
    arma::vec q_eigenvalues;   // Concatenation over clusters of beta_{n,i} * lambda, length M
};

// Draws the stacked channel: cluster block n is sqrt(beta_{n,k}) * R^(1/2) * H with
// H i.i.d. CN(0,1). Returns an [M, K] matrix with M = n_clusters * corr.dim().
// Throws std::invalid_argument on dimension mismatch.
arma::cx_mat sample_channel(std::mt19937_64 &eng, const LinkGains &gains, const TransmitCorrelation &corr);

// CSI model: returns xi * g + sqrt(1 - xi^2) * E with E a fresh channel draw that is
// independent of g and statistically identical to it. xi = 1 returns g unchanged
// without consuming random numbers. Throws std::invalid_argument for xi outside [0, 1].
arma::cx_mat apply_imperfect_csi(std::mt19937_64 &eng, const arma::cx_mat &g, double xi,
                                 const LinkGains &gains, const TransmitCorrelation &corr);

// Eigenvalues of user i's composite gain matrix, computed from the shared correlation
// spectrum without assembling the M x M matrix. user is zero-based.
UserGainSpectrum user_gain_spectrum(arma::uword user, const LinkGains &gains,
                                    const TransmitCorrelation &corr);

// Draws a fresh standard complex Gaussian v of length m_total and evaluates the
// normalized quadratic form (1/M) * sum_m q_m |v_m|^2, whose expectation is the
// user's mean gain. Test instrumentation for the law-of-large-numbers behavior.
double quadratic_form_limit_check(std::mt19937_64 &eng, const UserGainSpectrum &spectrum,
                                  arma::uword m_total);

} // namespace massim

#endif
