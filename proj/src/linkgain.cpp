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

#include "massim/linkgain.hpp"
#include "massim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace massim
{

StatisticalDrop statistical_drop(std::mt19937_64 &eng, const DropConfig &cfg)
{
    if (cfg.n_clusters < 1 || cfg.n_users < 1)
        throw std::invalid_argument("statistical_drop: need at least one cluster and one user");
    if (cfg.d_max_m <= cfg.d_min_m)
        throw std::invalid_argument("statistical_drop: d_max_m must exceed d_min_m (got " +
                                    std::to_string(cfg.d_min_m) + " .. " + std::to_string(cfg.d_max_m) + ")");
    if (cfg.d_min_m < 0.0 || cfg.pathloss_exponent <= 0.0 || cfg.shadow_sigma_db < 0.0)
        throw std::invalid_argument("statistical_drop: negative distance, exponent or shadowing");
    if (cfg.beta_floor && cfg.beta_min_db >= cfg.beta_max_db)
        throw std::invalid_argument("statistical_drop: beta_min_db must be below beta_max_db");

    const arma::uword n = cfg.n_clusters;
    const arma::uword k = cfg.n_users;
    const double region = cfg.region_radius_m > 0.0
                              ? cfg.region_radius_m
                              : (n == 1 ? cfg.d_max_m : cfg.d_max_m / 2.0);
    if (region <= cfg.d_min_m)
        throw std::invalid_argument("statistical_drop: region radius must exceed d_min_m");

    StatisticalDrop drop;
    drop.layout.region_radius = region;
    drop.layout.d_min = cfg.d_min_m;
    drop.layout.d_max = cfg.d_max_m;
    drop.layout.bs_positions.set_size(n, 2);
    if (n == 1)
    {
        drop.layout.bs_positions.zeros();
    }
    else
    {
        for (arma::uword c = 0; c < n; c++)
        {
            const double ang = 2.0 * arma::datum::pi * static_cast<double>(c) / static_cast<double>(n);
            drop.layout.bs_positions(c, 0) = region * std::cos(ang);
            drop.layout.bs_positions(c, 1) = region * std::sin(ang);
        }
    }

    drop.layout.user_positions.set_size(k, 2);
    arma::mat dist(n, k);
    for (arma::uword u = 0; u < k; u++)
    {
        for (int attempt = 0;; attempt++)
        {
            if (attempt >= 100000)
                throw std::runtime_error("statistical_drop: cannot place a user outside d_min_m = " +
                                         std::to_string(cfg.d_min_m) + " within region radius " +
                                         std::to_string(region));
            const double r = region * std::sqrt(uniform01(eng));
            const double th = 2.0 * arma::datum::pi * uniform01(eng);
            const double x = r * std::cos(th);
            const double y = r * std::sin(th);
            bool ok = true;
            for (arma::uword c = 0; c < n && ok; c++)
            {
                const double ddx = drop.layout.bs_positions(c, 0) - x;
                const double ddy = drop.layout.bs_positions(c, 1) - y;
                dist(c, u) = std::sqrt(ddx * ddx + ddy * ddy);
                ok = dist(c, u) >= cfg.d_min_m;
            }
            if (ok)
            {
                drop.layout.user_positions(u, 0) = x;
                drop.layout.user_positions(u, 1) = y;
                break;
            }
        }
    }

    arma::mat core(n, k);
    for (arma::uword u = 0; u < k; u++)
        for (arma::uword c = 0; c < n; c++)
        {
            const double d_eff = std::min(dist(c, u), cfg.d_max_m);
            const double shadow_db = cfg.shadow_sigma_db * draw_normal(eng);
            core(c, u) = std::pow(10.0, shadow_db / 10.0) * std::pow(d_eff, -cfg.pathloss_exponent);
        }

    const double beta_max = std::pow(10.0, cfg.beta_max_db / 10.0);
    drop.gains.beta = (beta_max / core.max()) * core;
    if (cfg.beta_floor)
    {
        const double beta_min = std::pow(10.0, cfg.beta_min_db / 10.0);
        drop.gains.beta.transform([beta_min](double b) { return b < beta_min ? beta_min : b; });
    }
    drop.gains.model_tag = "statistical";
    return drop;
}

LinkGains limiting_profile(arma::uword n_users, double beta_min, double beta_max,
                           arma::uword n_clusters, int profile)
{
    if (n_users < 1)
        throw std::invalid_argument("limiting_profile: need at least one user");
    if (!(beta_min > 0.0) || beta_min > beta_max)
        throw std::invalid_argument("limiting_profile: need 0 < beta_min <= beta_max");
    if (n_clusters < 1 || n_clusters > 2)
        throw std::invalid_argument("limiting_profile: the limiting gain model supports 1 or 2 clusters, got " +
                                    std::to_string(n_clusters));
    if (profile < 1 || profile > 3)
        throw std::invalid_argument("limiting_profile: profile must be 1, 2 or 3, got " + std::to_string(profile));

    const arma::uword k = n_users;
    arma::rowvec row1(k);
    const double ratio = beta_min / beta_max;
    for (arma::uword i = 0; i < k; i++)
    {
        const double x = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(k));
        row1(i) = beta_max * std::pow(ratio, x);
    }

    LinkGains gains;
    gains.model_tag = "limiting:" + std::to_string(profile);
    if (n_clusters == 1)
    {
        gains.beta = row1;
        return gains;
    }

    arma::rowvec row2(k);
    switch (profile)
    {
    case 1:
        row2 = row1;
        break;
    case 2:
        row2 = arma::fliplr(row1);
        break;
    default: // profile 3: cyclic shift by ceil(K / 2)
    {
        const arma::uword s = (k + 1) / 2;
        for (arma::uword i = 0; i < k; i++)
            row2(i) = row1((i + s) % k);
        break;
    }
    }
    gains.beta = arma::join_cols(row1, row2);
    return gains;
}

BetaAverages beta_averages(const LinkGains &gains)
{
    const arma::mat &beta = gains.beta;
    if (beta.n_elem == 0 || beta.min() <= 0.0 || !beta.is_finite())
        throw std::invalid_argument("beta_averages: gains must be strictly positive and finite");

    const arma::uword n = beta.n_rows;
    const arma::uword k = beta.n_cols;

    BetaAverages avg;
    avg.beta_bar_i = arma::mean(beta, 0).t();
    avg.beta_sq_bar_i = arma::mean(arma::square(beta), 0).t();
    avg.beta_bar = arma::accu(beta) / static_cast<double>(n * k);

    avg.beta_ik_bar.zeros(k);
    if (k > 1)
    {
        const arma::vec row_sums = arma::sum(beta, 1); // per cluster, length n
        for (arma::uword i = 0; i < k; i++)
        {
            double cross = 0.0;
            for (arma::uword c = 0; c < n; c++)
                cross += beta(c, i) * (row_sums(c) - beta(c, i));
            avg.beta_ik_bar(i) = cross / static_cast<double>(n * (k - 1));
        }
    }
    return avg;
}

double ProfileLimits::beta_ik_bar(arma::uword i, arma::uword n_users) const
{
    const double x = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n_users));
    return beta_max * std::pow(beta_min / beta_max, x) * beta_bar;
}

ProfileLimits closed_form_limits(double beta_min, double beta_max)
{
    if (!(beta_min > 0.0) || beta_min > beta_max)
        throw std::invalid_argument("closed_form_limits: need 0 < beta_min <= beta_max");

    ProfileLimits lim;
    lim.beta_min = beta_min;
    lim.beta_max = beta_max;
    lim.beta_bar = beta_min == beta_max
                       ? beta_max
                       : (beta_max - beta_min) / (std::log(beta_max) - std::log(beta_min));
    return lim;
}

} // namespace massim
