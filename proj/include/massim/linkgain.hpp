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

#ifndef massim_linkgain_H
#define massim_linkgain_H

#include <armadillo>
#include <random>
#include <string>

namespace massim
{

// Large-scale link gains between N clusters and K users, linear scale.
struct LinkGains
{
    arma::mat beta;            // Size [n_clusters, n_users], strictly positive
    std::string model_tag;     // "statistical" or "limiting:<profile>"
};

// Geometry of one random drop.
struct DropLayout
{
    arma::mat bs_positions;    // Cluster coordinates in meters, size [n_clusters, 2]
    arma::mat user_positions;  // User coordinates in meters, size [n_users, 2]
    double region_radius = 0;  // Coverage disc radius in meters, centered at the origin
    double d_min = 0;          // Smallest admissible link distance, meters
    double d_max = 0;          // Largest admissible link distance, meters
};

// Parameters of the statistical drop model.
struct DropConfig
{
    arma::uword n_clusters = 1;
    arma::uword n_users = 1;
    double shadow_sigma_db = 8.0;      // Log-normal shadowing standard deviation, dB
    double pathloss_exponent = 4.0;
    double d_min_m = 50.0;             // Users closer than this to any cluster are resampled
    double d_max_m = 1000.0;           // Upper link-distance bound
    double beta_max_db = 15.0;         // Strongest link gain after normalization, dB
    double beta_min_db = -15.0;        // Floor applied to weak links when beta_floor is set, dB
    bool beta_floor = true;            // Clamp gains into [beta_min, beta_max]
    double region_radius_m = 0.0;      // 0 selects the automatic rule, see statistical_drop
};

struct StatisticalDrop
{
    DropLayout layout;
    LinkGains gains;
};

// Empirical gain averages feeding the asymptotic SINR expression.
struct BetaAverages
{
    arma::vec beta_bar_i;      // Per-user mean over clusters of beta, length K
    arma::vec beta_sq_bar_i;   // Per-user mean over clusters of beta^2, length K
    arma::vec beta_ik_bar;     // Per-user cross-product average over interferers, length K
    double beta_bar = 0;       // Grand mean over all links
};

// Draws one random drop: users uniform over the coverage disc (resampled while any
// link is shorter than d_min), one cluster at the center for n_clusters = 1 and
// clusters equidistant on the disc periphery otherwise. The region radius defaults
// to d_max for a single cluster and d_max / 2 for several, which keeps every link
// inside [d_min, d_max] by construction; a custom region_radius_m overrides this and
// distances are then capped at d_max for the gain computation. Link gains are
// A * L * d^(-gamma) with i.i.d. log-normal shadowing L and A chosen per drop so the
// strongest link equals beta_max; with beta_floor set, gains below beta_min are
// raised to beta_min so the dynamic range matches the limiting gain model.
// Throws std::invalid_argument on inconsistent configuration (e.g. d_max <= d_min).
StatisticalDrop statistical_drop(std::mt19937_64 &eng, const DropConfig &cfg);

// Deterministic exponential gain profile evaluated at x = (2k - 1) / 2K: row 1 is
// beta_max * (beta_min / beta_max)^x. With two clusters, profile 1 repeats row 1,
// profile 2 reverses it, and profile 3 shifts it cyclically by ceil(K / 2) so users
// in the middle of cluster 1's range are strongest at cluster 2.
// Throws std::invalid_argument for n_clusters > 2 or an unknown profile.
LinkGains limiting_profile(arma::uword n_users, double beta_min, double beta_max,
                           arma::uword n_clusters, int profile);

// Finite-K empirical averages of the gain matrix. With a single user the
// cross-product average has no interferers and is reported as zero.
BetaAverages beta_averages(const LinkGains &gains);

// Analytic values of the gain averages for the exponential profile as K grows:
// beta_bar is the integral of the profile over [0, 1].
struct ProfileLimits
{
    double beta_bar = 0;
    double beta_min = 0;
    double beta_max = 0;

    // Cross-product average for zero-based user i of K under a single cluster:
    // profile value at that user times beta_bar.
    double beta_ik_bar(arma::uword i, arma::uword n_users) const;
};

// Throws std::invalid_argument unless 0 < beta_min <= beta_max.
ProfileLimits closed_form_limits(double beta_min, double beta_max);

} // namespace massim

#endif
