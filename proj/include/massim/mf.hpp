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

#ifndef massim_mf_H
#define massim_mf_H

#include "massim/channel.hpp"
#include "massim/correlation.hpp"
#include "massim/linkgain.hpp"

#include <armadillo>
#include <random>

namespace massim
{

// Scalar system parameters shared by the SINR expressions.
struct SystemConfig
{
    double rho_f = 10.0;        // Transmit SNR, linear scale
    double xi = 1.0;            // CSI accuracy in [0, 1]
    double noise_power = 1.0;   // Receiver noise power sigma^2
};

// Per-user SINR results for one channel realization.
struct SinrReport
{
    arma::vec per_user_sinr;    // Linear scale, length K
    arma::vec per_user_limit;   // Asymptotic values if attached by the caller, length K or empty
    double gamma = 0;           // Precoder power normalization
    double mean_sinr_db = 0;    // 10*log10 of the user-mean linear SINR
    double std_sinr_db = 0;     // Standard deviation over users of the per-user SINR in dB
};

// Expected signal and interference-plus-noise powers per user (the two halves of the
// SINR ratio), exposed separately so they can be checked against the Monte Carlo
// downlink simulation.
struct SinrComponents
{
    arma::vec signal_power;              // Length K
    arma::vec interference_noise_power;  // Length K, includes the noise floor
};

// Inputs of the asymptotic SINR expression.
struct LimitInputs
{
    double rho_f = 10.0;
    double alpha = 10.0;        // Antennas per user, M / K
    double xi = 1.0;
    double lambda_bar_sq = 1.0; // Mean squared correlation eigenvalue
    double noise_power = 1.0;
    BetaAverages averages;
};

// Special cases of the asymptotic expression with independent formulas.
enum class LimitCase
{
    perfect_csi,
    no_corr,
    equal_power_corr,
    no_corr_equal_power,
    no_corr_equal_power_perfect_csi
};

// Precoder power normalization gamma = ||G_hat||_F^2 / K.
// Throws std::runtime_error for an all-zero estimate.
double gamma_norm(const arma::cx_mat &g_hat);

// Expected per-user signal and interference-plus-noise powers given the CSI estimate:
// signal_i = (rho_f / (K gamma)) * (xi^2 |g_hat_i^H g_hat_i|^2 + (1 - xi^2) g_hat_i^H P_i g_hat_i),
// interference_i adds the same decomposition summed over the other users plus noise.
// Quadratic forms with the block-diagonal P_i use the per-cluster correlation directly.
SinrComponents expected_sinr_components(const arma::cx_mat &g_hat, const LinkGains &gains,
                                        const TransmitCorrelation &corr, const SystemConfig &sys);

// Ratio of the expected powers per user plus summary statistics.
SinrReport expected_sinr(const arma::cx_mat &g_hat, const LinkGains &gains,
                         const TransmitCorrelation &corr, const SystemConfig &sys);

// Monte Carlo estimates of the same two powers from the received-signal model: each
// draw samples data symbols (i.i.d. CN(0, 1/K)), receiver noise, and a true channel
// consistent with the estimate (xi * g_hat plus an independent remainder), then
// accumulates the desired-term and interference-plus-noise powers per user.
// Serves as the independent oracle for expected_sinr_components.
// Throws std::invalid_argument for n_draws < 1.
SinrComponents simulate_downlink(std::mt19937_64 &eng, const arma::cx_mat &g_hat,
                                 const LinkGains &gains, const TransmitCorrelation &corr,
                                 const SystemConfig &sys, arma::uword n_draws);

// One deterministic application of the downlink equation
// x = sqrt(rho_f / gamma) * G^T * conj(G_hat) * q + w.
arma::cx_vec received_signal(const arma::cx_mat &g, const arma::cx_mat &g_hat,
                             const arma::cx_vec &symbols, const arma::cx_vec &noise,
                             const SystemConfig &sys);

// Asymptotic per-user SINR:
// rho_f * alpha * xi^2 * beta_bar_i^2 / (noise * beta_bar + rho_f * beta_ik_bar_i * lambda_bar_sq).
arma::vec limit_sinr(const LimitInputs &in);
double limit_sinr(const LimitInputs &in, arma::uword user);

// Large-rho_f ceiling of the limit: alpha * xi^2 * beta_bar_i^2 / (beta_ik_bar_i * lambda_bar_sq).
// Infinite when a user has no interferers.
arma::vec limit_sinr_ceiling(const LimitInputs &in);

// Evaluates the named special case through its own reduced formula; equals limit_sinr
// under the corresponding parameter restriction. Cases requiring equal gains throw
// std::invalid_argument when the gain matrix is not constant.
double limit_sinr_special(LimitCase which, const LimitInputs &in, arma::uword user);

} // namespace massim

#endif
