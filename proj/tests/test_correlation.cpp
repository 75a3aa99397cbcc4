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

#include "massim/correlation.hpp"

#include <armadillo>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

using namespace massim;

// Geometry with unit wavelength so grid distances count directly.
static ArrayGeometry unit_wavelength_geometry(arma::uword m, double side = 1.0)
{
    return build_geometry(m, side, 299792458.0);
}

TEST_CASE("two antennas form one cross-polarized pair at the square center")
{
    ArrayGeometry geom = build_geometry(2, 1.0, 2.6e9);
    REQUIRE(geom.pair_positions.n_rows == 1);
    CHECK(geom.pair_positions(0, 0) == doctest::Approx(0.5));
    CHECK(geom.pair_positions(0, 1) == doctest::Approx(0.5));
    CHECK(geom.wavelength == doctest::Approx(299792458.0 / 2.6e9).epsilon(1e-12));
}

TEST_CASE("eight antennas put four pairs at the square corners")
{
    ArrayGeometry geom = build_geometry(8, 1.0, 2.6e9);
    REQUIRE(geom.pair_positions.n_rows == 4);
    const double want[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (arma::uword i = 0; i < 4; i++)
    {
        CHECK(geom.pair_positions(i, 0) == doctest::Approx(want[i][0]));
        CHECK(geom.pair_positions(i, 1) == doctest::Approx(want[i][1]));
    }
}

TEST_CASE("grids fill row-major and center a partial last row")
{
    // 5 pairs -> 2 rows x 3 cols, the 2-element last row is centered
    ArrayGeometry geom = build_geometry(10, 1.0, 2.6e9);
    REQUIRE(geom.pair_positions.n_rows == 5);
    const double want[5][2] = {{0, 0}, {0.5, 0}, {1, 0}, {0.25, 1}, {0.75, 1}};
    for (arma::uword i = 0; i < 5; i++)
    {
        CHECK(geom.pair_positions(i, 0) == doctest::Approx(want[i][0]));
        CHECK(geom.pair_positions(i, 1) == doctest::Approx(want[i][1]));
    }

    // 9 pairs -> full 3 x 3 grid over {0, 0.5, 1}^2
    ArrayGeometry grid = build_geometry(18, 1.0, 2.6e9);
    REQUIRE(grid.pair_positions.n_rows == 9);
    for (arma::uword i = 0; i < 9; i++)
    {
        CHECK(grid.pair_positions(i, 0) == doctest::Approx(0.5 * (i % 3)));
        CHECK(grid.pair_positions(i, 1) == doctest::Approx(0.5 * (i / 3)));
    }
}

TEST_CASE("geometry rejects odd counts and non-positive scalars")
{
    CHECK_THROWS_AS(build_geometry(7, 1.0, 2.6e9), std::invalid_argument);
    CHECK_THROWS_AS(build_geometry(0, 1.0, 2.6e9), std::invalid_argument);
    CHECK_THROWS_AS(build_geometry(8, 0.0, 2.6e9), std::invalid_argument);
    CHECK_THROWS_AS(build_geometry(8, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("exponential correlation decays from one and validates inputs")
{
    CHECK(exp_correlation(4.0, 0.0) == doctest::Approx(1.0));
    CHECK(exp_correlation(4.0, 1.0) == doctest::Approx(0.25));
    CHECK(exp_correlation(4.0, 0.5) > exp_correlation(4.0, 1.5));
    CHECK_THROWS_AS(exp_correlation(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(exp_correlation(4.0, -0.5), std::invalid_argument);
}

TEST_CASE("a single pair reduces to the cross-polarization block")
{
    ArrayGeometry geom = build_geometry(2, 1.0, 2.6e9);
    TransmitCorrelation corr = build_rt(geom, 4.0, 0.3);
    REQUIRE(corr.dim() == 2);
    CHECK(corr.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(corr.matrix(0, 1) == doctest::Approx(0.3));
    CHECK(corr.matrix(1, 0) == doctest::Approx(0.3));
    CHECK(corr.eigenvalues(0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(corr.eigenvalues(1) == doctest::Approx(1.3).epsilon(1e-12));
    // mean(lambda^2) = 1 + r_pol^2 for a 2x2 block with unit diagonal
    CHECK(lambda_bar_sq(corr) == doctest::Approx(1.0 + 0.3 * 0.3).epsilon(1e-12));
}

TEST_CASE("two pairs produce the kronecker eigenvalue structure")
{
    // Unit wavelength, side 1: the two pairs sit one wavelength apart
    ArrayGeometry geom = unit_wavelength_geometry(4);
    const double a = 4.0, r = 0.2;
    TransmitCorrelation corr = build_rt(geom, a, r);
    REQUIRE(corr.dim() == 4);

    // Eigenvalues of kron(C, X) are products: C has 1 -+ 1/a, X has 1 -+ r
    const double c = 1.0 / a;
    arma::vec want = {(1 - c) * (1 - r), (1 - c) * (1 + r), (1 + c) * (1 - r), (1 + c) * (1 + r)};
    want = arma::sort(want);
    for (arma::uword i = 0; i < 4; i++)
        CHECK(corr.eigenvalues(i) == doctest::Approx(want(i)).epsilon(1e-10));

    CHECK(lambda_bar_sq(corr) == doctest::Approx((1 + c * c) * (1 + r * r)).epsilon(1e-10));

    // The stored square root really is a square root
    arma::mat err = corr.sqrt_matrix * corr.sqrt_matrix - corr.matrix;
    CHECK(arma::abs(err).max() < 1e-10);
}

TEST_CASE("identity correlation short-circuits the spectrum")
{
    TransmitCorrelation corr = identity_correlation(12);
    CHECK(corr.is_identity);
    CHECK(corr.dim() == 12);
    CHECK(lambda_bar_sq(corr) == 1.0);
    CHECK(arma::abs(corr.matrix - arma::eye(12, 12)).max() == 0.0);
}

TEST_CASE("mean squared eigenvalue equals the frobenius norm squared over m")
{
    ArrayGeometry geom = build_geometry(60, 0.4, 2.6e9);
    TransmitCorrelation corr = build_rt(geom, 4.0, 0.25);
    const double fro = arma::norm(corr.matrix, "fro");
    CHECK(lambda_bar_sq(corr) ==
          doctest::Approx(fro * fro / static_cast<double>(corr.dim())).epsilon(1e-10));
}

TEST_CASE("stronger cross-polarization and tighter spacing raise the spread")
{
    ArrayGeometry tight = unit_wavelength_geometry(32, 1.0);
    ArrayGeometry loose = unit_wavelength_geometry(32, 10.0);
    const double lb_tight = lambda_bar_sq(build_rt(tight, 4.0, 0.1));
    const double lb_loose = lambda_bar_sq(build_rt(loose, 4.0, 0.1));
    CHECK(lb_tight > lb_loose);
    CHECK(lb_loose >= 1.0 - 1e-12);

    const double lb_rp_low = lambda_bar_sq(build_rt(tight, 4.0, 0.1));
    const double lb_rp_high = lambda_bar_sq(build_rt(tight, 4.0, 0.5));
    CHECK(lb_rp_high > lb_rp_low);
}

TEST_CASE("meter-spaced table geometry lands near the coarse reference value")
{
    // Distances counted in meters (unit wavelength); 200 antennas, a = 4, r_pol = 0.1.
    // The 1000-antenna reference for this setting is 28.71; the smaller grid stays
    // within 10 percent of it.
    ArrayGeometry geom = unit_wavelength_geometry(200);
    TransmitCorrelation corr = build_rt(geom, 4.0, 0.1);
    const double lb2 = lambda_bar_sq(corr);
    CHECK(std::abs(lb2 - 28.71) / 28.71 < 0.10);
}

TEST_CASE("indefinite correlation inputs are rejected with the eigenvalue")
{
    // a < 1 makes the pair correlation grow with distance, which is indefinite
    ArrayGeometry geom = unit_wavelength_geometry(4);
    try
    {
        build_rt(geom, 0.25, 0.1);
        FAIL("expected std::runtime_error");
    }
    catch (const std::runtime_error &e)
    {
        const std::string msg = e.what();
        CHECK(msg.find("most negative eigenvalue") != std::string::npos);
    }
}

TEST_CASE("cross-polarization correlation outside [0, 1) is rejected")
{
    ArrayGeometry geom = build_geometry(4, 1.0, 2.6e9);
    CHECK_THROWS_AS(build_rt(geom, 4.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rt(geom, 4.0, -0.1), std::invalid_argument);
}

TEST_CASE("coincident pairs give a singular matrix whose roundoff is clamped")
{
    ArrayGeometry geom;
    geom.side_length = 1.0;
    geom.carrier_freq = 299792458.0;
    geom.wavelength = 1.0;
    geom.pair_positions = arma::mat{{0.0, 0.0}, {0.0, 0.0}};

    TransmitCorrelation corr = build_rt(geom, 4.0, 0.2);
    CHECK(corr.eigenvalues.min() >= 0.0);
    // Exact spectrum: kron({0, 2}, {0.8, 1.2}) = {0, 0, 1.6, 2.4}
    CHECK(corr.eigenvalues(2) == doctest::Approx(1.6).epsilon(1e-10));
    CHECK(corr.eigenvalues(3) == doctest::Approx(2.4).epsilon(1e-10));
    arma::mat err = corr.sqrt_matrix * corr.sqrt_matrix - corr.matrix;
    CHECK(arma::abs(err).max() < 1e-10);
}

TEST_CASE("correlation csv dumps round-trip through armadillo")
{
    ArrayGeometry geom = build_geometry(12, 1.0, 2.6e9);
    TransmitCorrelation corr = build_rt(geom, 4.0, 0.3);

    const std::string mpath = "/tmp/massim_test_corr_matrix.csv";
    const std::string epath = "/tmp/massim_test_corr_eig.csv";
    dump_correlation_csv(corr, mpath, epath);

    arma::mat m, e;
    REQUIRE(m.load(mpath, arma::csv_ascii));
    REQUIRE(e.load(epath, arma::csv_ascii));
    REQUIRE(m.n_rows == corr.matrix.n_rows);
    CHECK(arma::abs(m - corr.matrix).max() < 1e-12);
    CHECK(arma::abs(e.t() - corr.eigenvalues).max() < 1e-12);
    std::remove(mpath.c_str());
    std::remove(epath.c_str());
}
