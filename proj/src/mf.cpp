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

#include "massim/mf.hpp"
#include "massim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace massim
{

double gamma_norm(const arma::cx_mat &g_hat)
{
    if (g_hat.n_elem == 0)
        throw std::invalid_argument("gamma_norm: empty channel estimate");
    const double total = arma::accu(arma::square(arma::abs(g_hat)));
    if (!(total > 0.0))
        throw std::runtime_error("gamma_norm: channel estimate is all-zero, precoder power undefined");
    return total / static_cast<double>(g_hat.n_cols);
}

SinrComponents expected_sinr_components(const arma::cx_mat &g_hat, const LinkGains &gains,
                                        const TransmitCorrelation &corr, const SystemConfig &sys)
{
    const arma::uword n = gains.beta.n_rows;
    const arma::uword k = gains.beta.n_cols;
    const arma::uword m_per = corr.dim();
    if (g_hat.n_rows != n * m_per || g_hat.n_cols != k)
        throw std::invalid_argument("expected_sinr_components: estimate dimensions do not match gains/correlation");
    if (sys.xi < 0.0 || sys.xi > 1.0)
        throw std::invalid_argument("expected_sinr_components: xi must lie in [0, 1]");
    if (sys.noise_power <= 0.0 || sys.rho_f < 0.0)
        throw std::invalid_argument("expected_sinr_components: noise power must be positive, rho_f nonnegative");

    const double gamma = gamma_norm(g_hat);
    const double c = sys.rho_f / (static_cast<double>(k) * gamma);
    const double xi_sq = sys.xi * sys.xi;

    // gram(i, k) = g_hat_i^H g_hat_k; only squared magnitudes enter the powers
    const arma::cx_mat gram = g_hat.t() * g_hat;
    const arma::mat coupling = arma::square(arma::abs(gram));

    // quad(i, k) = g_hat_k^H P_i g_hat_k via the block structure: sum over clusters of
    // beta_{n,i} times the per-cluster quadratic form of g_hat_k with the correlation
    arma::mat quad;
    if (xi_sq < 1.0)
    {
        arma::mat per_cluster(n, k);
        for (arma::uword c2 = 0; c2 < n; c2++)
        {
            const arma::cx_mat seg = g_hat.rows(c2 * m_per, (c2 + 1) * m_per - 1);
            if (corr.is_identity)
                per_cluster.row(c2) = arma::sum(arma::square(arma::abs(seg)), 0);
            else
                per_cluster.row(c2) = arma::sum(arma::real(arma::conj(seg) % (corr.matrix * seg)), 0);
        }
        quad = gains.beta.t() * per_cluster; // [K, K]
    }

    SinrComponents out;
    out.signal_power.set_size(k);
    out.interference_noise_power.set_size(k);
    for (arma::uword i = 0; i < k; i++)
    {
        double sig = xi_sq * coupling(i, i);
        double intf = xi_sq * (arma::accu(coupling.row(i)) - coupling(i, i));
        if (xi_sq < 1.0)
        {
            sig += (1.0 - xi_sq) * quad(i, i);
            intf += (1.0 - xi_sq) * (arma::accu(quad.row(i)) - quad(i, i));
        }
        out.signal_power(i) = c * sig;
        out.interference_noise_power(i) = c * intf + sys.noise_power;
    }
    return out;
}

SinrReport expected_sinr(const arma::cx_mat &g_hat, const LinkGains &gains,
                         const TransmitCorrelation &corr, const SystemConfig &sys)
{
    const SinrComponents comp = expected_sinr_components(g_hat, gains, corr, sys);

    SinrReport rep;
    rep.gamma = gamma_norm(g_hat);
    rep.per_user_sinr = comp.signal_power / comp.interference_noise_power;
    rep.mean_sinr_db = 10.0 * std::log10(arma::mean(rep.per_user_sinr));
    const arma::vec sinr_db = 10.0 * arma::log10(rep.per_user_sinr);
    rep.std_sinr_db = rep.per_user_sinr.n_elem > 1 ? arma::stddev(sinr_db) : 0.0;
    return rep;
}

SinrComponents simulate_downlink(std::mt19937_64 &eng, const arma::cx_mat &g_hat,
                                 const LinkGains &gains, const TransmitCorrelation &corr,
                                 const SystemConfig &sys, arma::uword n_draws)
{
    if (n_draws < 1)
        throw std::invalid_argument("simulate_downlink: n_draws must be >= 1");
    const arma::uword k = g_hat.n_cols;
    if (g_hat.n_rows != gains.beta.n_rows * corr.dim() || k != gains.beta.n_cols)
        throw std::invalid_argument("simulate_downlink: estimate dimensions do not match gains/correlation");

    const double gamma = gamma_norm(g_hat);
    const double c = sys.rho_f / gamma;
    const double sqrt_c = std::sqrt(c);
    const double xi = sys.xi;
    const double remainder = std::sqrt(std::max(0.0, 1.0 - xi * xi));
    const arma::cx_mat g_hat_conj = arma::conj(g_hat);

    arma::vec signal(k, arma::fill::zeros);
    arma::vec intf(k, arma::fill::zeros);

    for (arma::uword d = 0; d < n_draws; d++)
    {
        // True channel consistent with the estimate: the estimate explains a xi
        // fraction and the remainder is an independent, identically shaped draw
        arma::cx_mat g;
        if (xi >= 1.0)
            g = g_hat;
        else
            g = xi * g_hat + remainder * sample_channel(eng, gains, corr);

        const arma::cx_vec q = draw_cn_vec(eng, k, 1.0 / static_cast<double>(k));
        const arma::cx_vec w = draw_cn_vec(eng, k, sys.noise_power);

        // coup(i, j) = g_i^T conj(g_hat_j): user i's response to user j's precoded stream
        const arma::cx_mat coup = g.st() * g_hat_conj;
        const arma::cx_vec all = coup * q;
        for (arma::uword i = 0; i < k; i++)
        {
            const std::complex<double> desired = coup(i, i) * q(i);
            signal(i) += c * std::norm(desired);
            intf(i) += std::norm(sqrt_c * (all(i) - desired) + w(i));
        }
    }

    SinrComponents out;
    out.signal_power = signal / static_cast<double>(n_draws);
    out.interference_noise_power = intf / static_cast<double>(n_draws);
    return out;
}

arma::cx_vec received_signal(const arma::cx_mat &g, const arma::cx_mat &g_hat,
                             const arma::cx_vec &symbols, const arma::cx_vec &noise,
                             const SystemConfig &sys)
{
    if (g.n_rows != g_hat.n_rows || g.n_cols != g_hat.n_cols)
        throw std::invalid_argument("received_signal: channel and estimate dimensions differ");
    if (symbols.n_elem != g.n_cols || noise.n_elem != g.n_cols)
        throw std::invalid_argument("received_signal: symbol or noise vector length must equal the user count");

    const double gamma = gamma_norm(g_hat);
    return std::sqrt(sys.rho_f / gamma) * (g.st() * (arma::conj(g_hat) * symbols)) + noise;
}

static void check_limit_inputs(const LimitInputs &in)
{
    if (in.averages.beta_bar <= 0.0 || !std::isfinite(in.averages.beta_bar))
        throw std::invalid_argument("limit_sinr: gain averages are degenerate (beta_bar <= 0)");
    if (in.alpha <= 0.0 || in.rho_f < 0.0 || in.noise_power <= 0.0)
        throw std::invalid_argument("limit_sinr: alpha and noise power must be positive, rho_f nonnegative");
    if (in.xi < 0.0 || in.xi > 1.0)
        throw std::invalid_argument("limit_sinr: xi must lie in [0, 1]");
    if (in.lambda_bar_sq < 1.0 - 1e-12)
        throw std::invalid_argument("limit_sinr: lambda_bar_sq cannot be below 1");
}

arma::vec limit_sinr(const LimitInputs &in)
{
    check_limit_inputs(in);
    const arma::vec num = in.rho_f * in.alpha * in.xi * in.xi * arma::square(in.averages.beta_bar_i);
    const arma::vec den = in.noise_power * in.averages.beta_bar +
                          in.rho_f * in.lambda_bar_sq * in.averages.beta_ik_bar;
    return num / den;
}

double limit_sinr(const LimitInputs &in, arma::uword user)
{
    const arma::vec all = limit_sinr(in);
    if (user >= all.n_elem)
        throw std::invalid_argument("limit_sinr: user index out of range");
    return all(user);
}

arma::vec limit_sinr_ceiling(const LimitInputs &in)
{
    check_limit_inputs(in);
    arma::vec out(in.averages.beta_bar_i.n_elem);
    for (arma::uword i = 0; i < out.n_elem; i++)
    {
        const double den = in.averages.beta_ik_bar(i) * in.lambda_bar_sq;
        const double num = in.alpha * in.xi * in.xi * in.averages.beta_bar_i(i) * in.averages.beta_bar_i(i);
        out(i) = den > 0.0 ? num / den : arma::datum::inf;
    }
    return out;
}

// Constant-gain check for the equal-power cases: every entry of the averages must
// collapse onto a single gain value.
static double equal_power_gain(const LimitInputs &in)
{
    const double b = in.averages.beta_bar;
    const double tol = 1e-9 * std::abs(b);
    const bool flat = arma::all(arma::abs(in.averages.beta_bar_i - b) <= tol) &&
                      arma::all(arma::abs(in.averages.beta_sq_bar_i - b * b) <= 2.0 * tol * std::abs(b));
    if (!flat)
        throw std::invalid_argument("limit_sinr_special: equal-power case requires a constant gain matrix");
    return b;
}

double limit_sinr_special(LimitCase which, const LimitInputs &in, arma::uword user)
{
    check_limit_inputs(in);
    if (user >= in.averages.beta_bar_i.n_elem)
        throw std::invalid_argument("limit_sinr_special: user index out of range");

    const double rho = in.rho_f;
    const double alpha = in.alpha;
    const double sigma2 = in.noise_power;

    switch (which)
    {
    case LimitCase::perfect_csi:
    {
        const double bi = in.averages.beta_bar_i(user);
        return rho * alpha * bi * bi /
               (sigma2 * in.averages.beta_bar + rho * in.lambda_bar_sq * in.averages.beta_ik_bar(user));
    }
    case LimitCase::no_corr:
    {
        const double bi = in.averages.beta_bar_i(user);
        return rho * alpha * in.xi * in.xi * bi * bi /
               (sigma2 * in.averages.beta_bar + rho * in.averages.beta_ik_bar(user));
    }
    case LimitCase::equal_power_corr:
    {
        const double b = equal_power_gain(in);
        return rho * alpha * in.xi * in.xi * b / (sigma2 + rho * b * in.lambda_bar_sq);
    }
    case LimitCase::no_corr_equal_power:
    {
        const double b = equal_power_gain(in);
        return rho * alpha * in.xi * in.xi * b / (sigma2 + rho * b);
    }
    case LimitCase::no_corr_equal_power_perfect_csi:
    {
        const double b = equal_power_gain(in);
        return rho * alpha * b / (sigma2 + rho * b);
    }
    }
    throw std::invalid_argument("limit_sinr_special: unknown case");
}

} // namespace massim
