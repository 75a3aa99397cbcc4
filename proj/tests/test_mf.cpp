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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "massim/mf.hpp"
#include "massim/rng.hpp"

#include <armadillo>
#include <cmath>
#include <stdexcept>

using namespace massim;

static TransmitCorrelation correlated_cluster(arma::uword m_per)
{
    ArrayGeometry geom = build_geometry(m_per, 1.0, 299792458.0);
    return build_rt(geom, 4.0, 0.3);
}

static LinkGains constant_gains(double b, arma::uword n, arma::uword k)
{
    LinkGains g;
    g.beta = arma::mat(n, k, arma::fill::value(b));
    g.model_tag = "statistical";
    return g;
}

// Dense composite gain matrix of user i: blocks beta_{n,i} * R on the diagonal.
static arma::mat dense_user_gain(const LinkGains &gains, const TransmitCorrelation &corr,
                                 arma::uword user)
{
    const arma::uword n = gains.beta.n_rows;
    const arma::uword m = corr.dim();
    arma::mat big(n * m, n * m, arma::fill::zeros);
    for (arma::uword c = 0; c < n; c++)
        big.submat(c * m, c * m, (c + 1) * m - 1, (c + 1) * m - 1) =
            gains.beta(c, user) * corr.matrix;
    return big;
}

TEST_CASE("precoder normalization is the squared norm per user")
{
    auto eng = make_substream(50, 0);
    arma::cx_mat g_hat(6, 3);
    fill_cn01(eng, g_hat);

    double total = 0;
    for (arma::uword m = 0; m < 6; m++)
        for (arma::uword k = 0; k < 3; k++)
            total += std::norm(g_hat(m, k));
    CHECK(gamma_norm(g_hat) == doctest::Approx(total / 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(gamma_norm(arma::cx_mat()), std::invalid_argument);
    CHECK_THROWS_AS(gamma_norm(arma::cx_mat(4, 2, arma::fill::zeros)), std::runtime_error);
}

TEST_CASE("expected powers match a brute-force evaluation with dense gain blocks")
{
    const TransmitCorrelation corr = correlated_cluster(4);
    LinkGains gains;
    gains.beta = arma::mat{{1.2, 0.5, 2.0}, {0.3, 1.6, 0.8}};
    gains.model_tag = "statistical";
    SystemConfig sys;
    sys.rho_f = 10.0;
    sys.xi = 0.8;
    sys.noise_power = 1.0;

    auto eng = make_substream(51, 0);
    arma::cx_mat g = sample_channel(eng, gains, corr);
    arma::cx_mat g_hat = apply_imperfect_csi(eng, g, sys.xi, gains, corr);

    const SinrComponents got = expected_sinr_components(g_hat, gains, corr, sys);

    const arma::uword k = 3;
    const double gamma = gamma_norm(g_hat);
    const double c = sys.rho_f / (k * gamma);
    const double xi_sq = sys.xi * sys.xi;

    for (arma::uword i = 0; i < k; i++)
    {
        const arma::cx_mat p_i(dense_user_gain(gains, corr, i),
                               arma::mat(g_hat.n_rows, g_hat.n_rows, arma::fill::zeros));
        double sig = 0, intf = 0;
        for (arma::uword j = 0; j < k; j++)
        {
            const std::complex<double> inner = arma::cdot(g_hat.col(i), g_hat.col(j));
            const double quad = std::real(arma::cdot(g_hat.col(j), p_i * g_hat.col(j)));
            const double term = xi_sq * std::norm(inner) + (1.0 - xi_sq) * quad;
            if (j == i)
                sig = term;
            else
                intf += term;
        }
        CHECK(got.signal_power(i) == doctest::Approx(c * sig).epsilon(1e-10));
        CHECK(got.interference_noise_power(i) ==
              doctest::Approx(c * intf + sys.noise_power).epsilon(1e-10));
    }
}

TEST_CASE("expected powers agree with the monte carlo downlink under correlation")
{
    const TransmitCorrelation corr = correlated_cluster(6);
    LinkGains gains;
    gains.beta = arma::mat{{1.0, 0.4, 1.8}};
    gains.model_tag = "statistical";
    SystemConfig sys;
    sys.rho_f = 10.0;
    sys.xi = 0.5;
    sys.noise_power = 1.0;

    auto eng = make_substream(52, 0);
    arma::cx_mat g = sample_channel(eng, gains, corr);
    arma::cx_mat g_hat = apply_imperfect_csi(eng, g, sys.xi, gains, corr);

    const SinrComponents analytic = expected_sinr_components(g_hat, gains, corr, sys);
    const SinrComponents mc = simulate_downlink(eng, g_hat, gains, corr, sys, 300000);

    for (arma::uword i = 0; i < 3; i++)
    {
        CHECK(mc.signal_power(i) == doctest::Approx(analytic.signal_power(i)).epsilon(0.02));
        CHECK(mc.interference_noise_power(i) ==
              doctest::Approx(analytic.interference_noise_power(i)).epsilon(0.02));
    }
}

TEST_CASE("expected powers agree with the monte carlo downlink without correlation")
{
    const TransmitCorrelation corr = identity_correlation(3);
    LinkGains gains;
    gains.beta = arma::mat{{1.0, 0.6, 1.5}, {0.8, 1.2, 0.3}};
    gains.model_tag = "statistical";
    SystemConfig sys;
    sys.rho_f = 10.0;
    sys.xi = 0.8;
    sys.noise_power = 1.0;

    auto eng = make_substream(53, 0);
    arma::cx_mat g = sample_channel(eng, gains, corr);
    arma::cx_mat g_hat = apply_imperfect_csi(eng, g, sys.xi, gains, corr);

    const SinrComponents analytic = expected_sinr_components(g_hat, gains, corr, sys);
    const SinrComponents mc = simulate_downlink(eng, g_hat, gains, corr, sys, 300000);

    for (arma::uword i = 0; i < 3; i++)
    {
        CHECK(mc.signal_power(i) == doctest::Approx(analytic.signal_power(i)).epsilon(0.02));
        CHECK(mc.interference_noise_power(i) ==
              doctest::Approx(analytic.interference_noise_power(i)).epsilon(0.02));
    }
}

TEST_CASE("the perfect-csi fast path is the continuous limit of the general formula")
{
    const TransmitCorrelation corr = correlated_cluster(4);
    LinkGains gains = constant_gains(1.0, 2, 4);
    auto eng = make_substream(54, 0);
    arma::cx_mat g_hat = sample_channel(eng, gains, corr);

    SystemConfig exact;
    exact.xi = 1.0;
    SystemConfig close;
    close.xi = 1.0 - 1e-9;

    const SinrComponents a = expected_sinr_components(g_hat, gains, corr, exact);
    const SinrComponents b = expected_sinr_components(g_hat, gains, corr, close);
    for (arma::uword i = 0; i < 4; i++)
    {
        CHECK(a.signal_power(i) == doctest::Approx(b.signal_power(i)).epsilon(1e-6));
        CHECK(a.interference_noise_power(i) ==
              doctest::Approx(b.interference_noise_power(i)).epsilon(1e-6));
    }
}

TEST_CASE("a lone user sees only noise in the denominator")
{
    const TransmitCorrelation corr = identity_correlation(4);
    LinkGains gains = constant_gains(1.0, 1, 1);
    SystemConfig sys;
    sys.noise_power = 0.37;
    auto eng = make_substream(55, 0);
    arma::cx_mat g_hat = sample_channel(eng, gains, corr);

    const SinrComponents comp = expected_sinr_components(g_hat, gains, corr, sys);
    CHECK(comp.interference_noise_power(0) == 0.37);
    CHECK(comp.signal_power(0) > 0.0);

    const SinrReport rep = expected_sinr(g_hat, gains, corr, sys);
    CHECK(rep.std_sinr_db == 0.0);
}

TEST_CASE("sinr reports summarize the linear user mean and the user spread in db")
{
    const TransmitCorrelation corr = identity_correlation(5);
    LinkGains gains;
    gains.beta = arma::mat{{2.0, 0.2, 1.0, 0.5}};
    gains.model_tag = "statistical";
    SystemConfig sys;
    auto eng = make_substream(56, 0);
    arma::cx_mat g_hat = sample_channel(eng, gains, corr);

    const SinrReport rep = expected_sinr(g_hat, gains, corr, sys);
    const SinrComponents comp = expected_sinr_components(g_hat, gains, corr, sys);
    const arma::vec ratio = comp.signal_power / comp.interference_noise_power;

    CHECK(arma::abs(rep.per_user_sinr - ratio).max() < 1e-15);
    CHECK(rep.mean_sinr_db == doctest::Approx(10.0 * std::log10(arma::mean(ratio))).epsilon(1e-12));
    CHECK(rep.std_sinr_db ==
          doctest::Approx(arma::stddev(arma::vec(10.0 * arma::log10(ratio)))).epsilon(1e-12));
    CHECK(rep.gamma == doctest::Approx(gamma_norm(g_hat)).epsilon(1e-14));
}

TEST_CASE("monte carlo downlink runs are reproducible and validated")
{
    const TransmitCorrelation corr = identity_correlation(4);
    LinkGains gains = constant_gains(1.0, 1, 2);
    SystemConfig sys;
    sys.xi = 0.8;
    auto e0 = make_substream(57, 0);
    arma::cx_mat g_hat = sample_channel(e0, gains, corr);

    auto e1 = make_substream(57, 1);
    auto e2 = make_substream(57, 1);
    const SinrComponents a = simulate_downlink(e1, g_hat, gains, corr, sys, 500);
    const SinrComponents b = simulate_downlink(e2, g_hat, gains, corr, sys, 500);
    CHECK(arma::abs(a.signal_power - b.signal_power).max() == 0.0);
    CHECK(arma::abs(a.interference_noise_power - b.interference_noise_power).max() == 0.0);

    CHECK_THROWS_AS(simulate_downlink(e1, g_hat, gains, corr, sys, 0), std::invalid_argument);
}

TEST_CASE("the received signal applies the conjugate precoder")
{
    SystemConfig sys;
    sys.rho_f = 8.0;
    const std::complex<double> j(0.0, 1.0);

    arma::cx_mat g(2, 1);
    g(0, 0) = 1.0;
    g(1, 0) = j;
    arma::cx_vec q = {std::complex<double>(0.3, -0.4)};
    arma::cx_vec w = {std::complex<double>(-0.1, 0.2)};

    // Estimate equal to the channel: y = sqrt(rho / gamma) * |g|^2 * q + w = 4 q + w
    arma::cx_vec y = received_signal(g, g, q, w, sys);
    CHECK(std::abs(y(0) - (4.0 * q(0) + w(0))) < 1e-14);

    // Estimate orthogonal to the channel: the precoded term vanishes entirely
    arma::cx_mat g_hat(2, 1);
    g_hat(0, 0) = j;
    g_hat(1, 0) = 1.0;
    arma::cx_vec y2 = received_signal(g, g_hat, q, w, sys);
    CHECK(std::abs(y2(0) - w(0)) < 1e-14);

    CHECK_THROWS_AS(received_signal(g, arma::cx_mat(3, 1, arma::fill::ones), q, w, sys),
                    std::invalid_argument);
}

// ---------------------------------------------------------------- asymptotic limit

static LimitInputs profile_inputs(arma::uword k, double xi, double lb2, double rho = 10.0)
{
    LinkGains g =
        limiting_profile(k, std::pow(10.0, -1.5), std::pow(10.0, 1.5), 1, 1);
    LimitInputs in;
    in.rho_f = rho;
    in.alpha = 10.0;
    in.xi = xi;
    in.lambda_bar_sq = lb2;
    in.noise_power = 1.0;
    in.averages = beta_averages(g);
    return in;
}

TEST_CASE("the asymptotic sinr follows the closed ratio of gain averages")
{
    LimitInputs in = profile_inputs(6, 0.8, 1.3);
    arma::vec lim = limit_sinr(in);
    REQUIRE(lim.n_elem == 6);
    for (arma::uword i = 0; i < 6; i++)
    {
        const double bi = in.averages.beta_bar_i(i);
        const double want = in.rho_f * in.alpha * in.xi * in.xi * bi * bi /
                            (in.noise_power * in.averages.beta_bar +
                             in.rho_f * in.lambda_bar_sq * in.averages.beta_ik_bar(i));
        CHECK(lim(i) == doctest::Approx(want).epsilon(1e-14));
        CHECK(limit_sinr(in, i) == doctest::Approx(lim(i)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(limit_sinr(in, 6), std::invalid_argument);
}

TEST_CASE("limit inputs are validated")
{
    LimitInputs in = profile_inputs(4, 0.8, 1.2);

    LimitInputs bad = in;
    bad.lambda_bar_sq = 0.5;
    CHECK_THROWS_AS(limit_sinr(bad), std::invalid_argument);

    bad = in;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(limit_sinr(bad), std::invalid_argument);

    bad = in;
    bad.noise_power = 0.0;
    CHECK_THROWS_AS(limit_sinr(bad), std::invalid_argument);

    bad = in;
    bad.xi = 1.2;
    CHECK_THROWS_AS(limit_sinr(bad), std::invalid_argument);

    bad = in;
    bad.averages.beta_bar = 0.0;
    CHECK_THROWS_AS(limit_sinr(bad), std::invalid_argument);
}

TEST_CASE("the limit moves the right way with each parameter")
{
    arma::vec base = limit_sinr(profile_inputs(8, 0.8, 1.3));
    CHECK(arma::all(limit_sinr(profile_inputs(8, 0.9, 1.3)) > base));
    CHECK(arma::all(limit_sinr(profile_inputs(8, 0.8, 2.0)) < base));
    CHECK(arma::all(limit_sinr(profile_inputs(8, 0.8, 1.3, 100.0)) > base));

    LimitInputs wide = profile_inputs(8, 0.8, 1.3);
    wide.alpha = 20.0;
    CHECK(arma::all(limit_sinr(wide) > base));
}

TEST_CASE("the interference ceiling is the high-power limit")
{
    LimitInputs in = profile_inputs(4, 0.8, 1.5, 1e9);
    arma::vec lim = limit_sinr(in);
    arma::vec ceil = limit_sinr_ceiling(in);
    for (arma::uword i = 0; i < 4; i++)
        CHECK(lim(i) == doctest::Approx(ceil(i)).epsilon(1e-6));

    // One user has no interferers, so nothing caps its SINR
    LimitInputs solo = in;
    solo.averages = beta_averages(constant_gains(2.0, 1, 1));
    arma::vec c1 = limit_sinr_ceiling(solo);
    CHECK(std::isinf(c1(0)));
}

TEST_CASE("special cases equal the general expression under their restrictions")
{
    // Perfect CSI, arbitrary gains and correlation
    LimitInputs in = profile_inputs(6, 1.0, 1.4);
    for (arma::uword u : {arma::uword(0), arma::uword(3), arma::uword(5)})
        CHECK(limit_sinr_special(LimitCase::perfect_csi, in, u) ==
              doctest::Approx(limit_sinr(in, u)).epsilon(1e-12));

    // No correlation, arbitrary gains and csi accuracy
    in = profile_inputs(6, 0.7, 1.0);
    for (arma::uword u = 0; u < 6; u++)
        CHECK(limit_sinr_special(LimitCase::no_corr, in, u) ==
              doctest::Approx(limit_sinr(in, u)).epsilon(1e-12));

    // Equal gains with correlation
    LimitInputs flat;
    flat.rho_f = 10.0;
    flat.alpha = 10.0;
    flat.xi = 0.6;
    flat.lambda_bar_sq = 1.8;
    flat.noise_power = 1.0;
    flat.averages = beta_averages(constant_gains(2.5, 1, 4));
    CHECK(limit_sinr_special(LimitCase::equal_power_corr, flat, 1) ==
          doctest::Approx(limit_sinr(flat, 1)).epsilon(1e-12));

    // Equal gains without correlation
    flat.lambda_bar_sq = 1.0;
    CHECK(limit_sinr_special(LimitCase::no_corr_equal_power, flat, 2) ==
          doctest::Approx(limit_sinr(flat, 2)).epsilon(1e-12));

    // Fully reduced case: unit gains, rho = alpha = 10 gives 100 / 11
    LimitInputs unit;
    unit.rho_f = 10.0;
    unit.alpha = 10.0;
    unit.xi = 1.0;
    unit.lambda_bar_sq = 1.0;
    unit.noise_power = 1.0;
    unit.averages = beta_averages(constant_gains(1.0, 1, 4));
    CHECK(limit_sinr_special(LimitCase::no_corr_equal_power_perfect_csi, unit, 0) ==
          doctest::Approx(100.0 / 11.0).epsilon(1e-12));
    CHECK(limit_sinr(unit, 0) == doctest::Approx(100.0 / 11.0).epsilon(1e-12));

    // Equal-power cases refuse unequal gain matrices
    LimitInputs uneven = profile_inputs(6, 0.6, 1.0);
    CHECK_THROWS_AS(limit_sinr_special(LimitCase::equal_power_corr, uneven, 0),
                    std::invalid_argument);
}
