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

#include "massim/harness.hpp"

#include "massim/channel.hpp"
#include "massim/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace massim
{

// ---------------------------------------------------------------- formatting

// Shortest decimal representation that parses back to the same double;
// whole numbers print without an exponent.
static std::string fmt_num(double v)
{
    char buf[48];
    if (v == std::floor(v) && std::abs(v) < 1e15)
    {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec)
    {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            return buf;
    }
    return buf; // NaN / inf fall through to the %.17g spelling
}

static double to_db(double x)
{
    return 10.0 * std::log10(x);
}

static double from_db(double x)
{
    return std::pow(10.0, x / 10.0);
}

// ---------------------------------------------------------------- experiment names

std::string to_string(ExperimentKind kind)
{
    switch (kind)
    {
    case ExperimentKind::convergence:     return "convergence";
    case ExperimentKind::error_cdf:       return "error_cdf";
    case ExperimentKind::shadow_sweep:    return "shadow_sweep";
    case ExperimentKind::sinr_cdf:        return "sinr_cdf";
    case ExperimentKind::single_user_cdf: return "single_user_cdf";
    case ExperimentKind::lambda_table:    return "lambda_table";
    }
    return "unknown";
}

ExperimentKind experiment_from_string(const std::string &name)
{
    if (name == "convergence")     return ExperimentKind::convergence;
    if (name == "error_cdf")       return ExperimentKind::error_cdf;
    if (name == "shadow_sweep")    return ExperimentKind::shadow_sweep;
    if (name == "sinr_cdf")        return ExperimentKind::sinr_cdf;
    if (name == "single_user_cdf") return ExperimentKind::single_user_cdf;
    if (name == "lambda_table")    return ExperimentKind::lambda_table;
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected convergence, error_cdf, shadow_sweep, sinr_cdf, "
                                "single_user_cdf or lambda_table)");
}

// ---------------------------------------------------------------- defaults

ExperimentConfig default_config(ExperimentKind kind)
{
    ExperimentConfig cfg;
    cfg.experiment = kind;

    switch (kind)
    {
    case ExperimentKind::convergence:
        cfg.k_values = {10, 20, 40, 60, 80, 100};
        cfg.n_values = {1, 2};
        cfg.xi_values = {1.0, 0.8};
        cfg.link_model = "limiting";
        cfg.output_path = "convergence.csv";
        break;

    case ExperimentKind::error_cdf:
        cfg.k_values = {20, 60, 100};
        cfg.n_values = {1, 5};
        cfg.xi_values = {1.0};
        cfg.n_drops = 300;
        cfg.output_path = "error_cdf.csv";
        break;

    case ExperimentKind::shadow_sweep:
        cfg.k_values = {60};
        cfg.n_values = {5};
        cfg.xi_values = {1.0};
        cfg.shadow_values = {6.0, 8.0, 10.0};
        cfg.n_drops = 500;
        cfg.output_path = "shadow_sweep.csv";
        break;

    case ExperimentKind::sinr_cdf:
        cfg.k_values = {100};
        cfg.n_values = {1, 5};
        cfg.xi_values = {1.0, 0.8};
        cfg.n_drops = 500;
        cfg.output_path = "sinr_cdf.csv";
        break;

    case ExperimentKind::single_user_cdf:
        cfg.k_values = {100};
        cfg.n_values = {1, 2, 5};
        cfg.xi_values = {1.0, 0.8};
        cfg.n_drops = 500;
        cfg.output_path = "single_user_cdf.csv";
        break;

    case ExperimentKind::lambda_table:
        cfg.n_values = {1, 2, 5, 10};
        cfg.r_pol_values = {0.1, 0.2, 0.3, 0.4, 0.5};
        cfg.correlated = true;
        cfg.output_path = "lambda_table.csv";
        break;
    }
    return cfg;
}

// ---------------------------------------------------------------- parsing

static std::string trim(const std::string &s)
{
    const char *ws = " \t\r\n";
    auto a = s.find_first_not_of(ws);
    if (a == std::string::npos)
        return "";
    auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

static double parse_num(const std::string &key, const std::string &value)
{
    try
    {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    }
    catch (...)
    {
        throw std::invalid_argument("config key '" + key + "': cannot parse '" + value +
                                    "' as a number");
    }
}

static std::uint64_t parse_u64(const std::string &key, const std::string &value)
{
    try
    {
        if (!value.empty() && value[0] == '-')
            throw std::invalid_argument("");
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    }
    catch (...)
    {
        throw std::invalid_argument("config key '" + key + "': cannot parse '" + value +
                                    "' as a nonnegative integer");
    }
}

static bool parse_bool(const std::string &key, const std::string &value)
{
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value +
                                "' as a boolean");
}

static std::vector<std::string> split_list(const std::string &key, const std::string &value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        item = trim(item);
        if (item.empty())
            throw std::invalid_argument("config key '" + key + "': empty list element in '" +
                                        value + "'");
        out.push_back(item);
    }
    if (out.empty())
        throw std::invalid_argument("config key '" + key + "': expected a comma separated list");
    return out;
}

static std::vector<double> parse_num_list(const std::string &key, const std::string &value)
{
    std::vector<double> out;
    for (const auto &item : split_list(key, value))
        out.push_back(parse_num(key, item));
    return out;
}

static std::vector<arma::uword> parse_uword_list(const std::string &key, const std::string &value)
{
    std::vector<arma::uword> out;
    for (const auto &item : split_list(key, value))
        out.push_back(static_cast<arma::uword>(parse_u64(key, item)));
    return out;
}

void apply_override(ExperimentConfig &cfg, const std::string &key, const std::string &value)
{
    if (key == "experiment")
        cfg.experiment = experiment_from_string(value);
    else if (key == "alpha")
        cfg.alpha = parse_num(key, value);
    else if (key == "rho_f_db")
        cfg.rho_f_db = parse_num(key, value);
    else if (key == "noise_power")
        cfg.noise_power = parse_num(key, value);
    else if (key == "k_values")
        cfg.k_values = parse_uword_list(key, value);
    else if (key == "n_values")
        cfg.n_values = parse_uword_list(key, value);
    else if (key == "xi_values")
        cfg.xi_values = parse_num_list(key, value);
    else if (key == "shadow_values")
        cfg.shadow_values = parse_num_list(key, value);
    else if (key == "r_pol_values")
        cfg.r_pol_values = parse_num_list(key, value);
    else if (key == "correlated")
        cfg.correlated = parse_bool(key, value);
    else if (key == "corr_a")
        cfg.corr_a = parse_num(key, value);
    else if (key == "r_pol")
        cfg.r_pol = parse_num(key, value);
    else if (key == "side_length_m")
        cfg.side_length_m = parse_num(key, value);
    else if (key == "carrier_freq_hz")
        cfg.carrier_freq_hz = parse_num(key, value);
    else if (key == "distance_unit")
        cfg.distance_unit = value;
    else if (key == "model")
        cfg.link_model = value;
    else if (key == "profile")
        cfg.profile = static_cast<int>(parse_u64(key, value));
    else if (key == "shadow_sigma_db")
        cfg.drop.shadow_sigma_db = parse_num(key, value);
    else if (key == "pathloss_exponent")
        cfg.drop.pathloss_exponent = parse_num(key, value);
    else if (key == "d_min_m")
        cfg.drop.d_min_m = parse_num(key, value);
    else if (key == "d_max_m")
        cfg.drop.d_max_m = parse_num(key, value);
    else if (key == "beta_max_db")
        cfg.drop.beta_max_db = parse_num(key, value);
    else if (key == "beta_min_db")
        cfg.drop.beta_min_db = parse_num(key, value);
    else if (key == "beta_floor")
        cfg.drop.beta_floor = parse_bool(key, value);
    else if (key == "region_radius_m")
        cfg.drop.region_radius_m = parse_num(key, value);
    else if (key == "n_drops")
        cfg.n_drops = static_cast<arma::uword>(parse_u64(key, value));
    else if (key == "n_fading")
        cfg.n_fading = static_cast<arma::uword>(parse_u64(key, value));
    else if (key == "fading_average")
        cfg.fading_average = parse_bool(key, value);
    else if (key == "seed")
        cfg.seed = parse_u64(key, value);
    else if (key == "output")
        cfg.output_path = value;
    else if (key == "lambda_table_m")
        cfg.lambda_table_m = static_cast<arma::uword>(parse_u64(key, value));
    else
        throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path + "'");

    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected 'key = value'");
        entries.emplace_back(key, value);
    }

    ExperimentKind kind = ExperimentKind::convergence;
    bool have_kind = false;
    for (const auto &[key, value] : entries)
        if (key == "experiment")
        {
            kind = experiment_from_string(value);
            have_kind = true;
        }
    if (!have_kind)
        throw std::invalid_argument("config file '" + path + "' must set the 'experiment' key");

    ExperimentConfig cfg = default_config(kind);
    for (const auto &[key, value] : entries)
        apply_override(cfg, key, value);
    return cfg;
}

// ---------------------------------------------------------------- validation

static arma::uword total_antennas(double alpha, arma::uword k)
{
    double m = alpha * static_cast<double>(k);
    double r = std::round(m);
    if (!(m > 0) || std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m)))
        throw std::invalid_argument("alpha * K must be a positive integer antenna count "
                                    "(alpha=" + fmt_num(alpha) + ", K=" + std::to_string(k) + ")");
    return static_cast<arma::uword>(r);
}

void validate_config(const ExperimentConfig &cfg)
{
    const bool needs_drops = cfg.experiment == ExperimentKind::error_cdf ||
                             cfg.experiment == ExperimentKind::shadow_sweep ||
                             cfg.experiment == ExperimentKind::sinr_cdf ||
                             cfg.experiment == ExperimentKind::single_user_cdf;

    if (cfg.experiment != ExperimentKind::lambda_table)
    {
        if (cfg.k_values.empty() || cfg.n_values.empty() || cfg.xi_values.empty())
            throw std::invalid_argument("k_values, n_values and xi_values must be nonempty");
        if (!(cfg.noise_power > 0))
            throw std::invalid_argument("noise_power must be positive");
        for (double xi : cfg.xi_values)
            if (!(xi >= 0.0 && xi <= 1.0))
                throw std::invalid_argument("xi must lie in [0, 1], got " + fmt_num(xi));
        for (arma::uword n : cfg.n_values)
        {
            if (n == 0)
                throw std::invalid_argument("n_values entries must be positive");
            for (arma::uword k : cfg.k_values)
            {
                if (k == 0)
                    throw std::invalid_argument("k_values entries must be positive");
                arma::uword m = total_antennas(cfg.alpha, k);
                if (m % (2 * n) != 0)
                    throw std::invalid_argument(
                        "K*alpha must be divisible by 2*N so each cluster holds a whole grid of "
                        "cross-polarized antenna pairs (K=" + std::to_string(k) +
                        ", alpha=" + fmt_num(cfg.alpha) + ", N=" + std::to_string(n) +
                        " gives M=" + std::to_string(m) + ")");
            }
        }
    }

    if (cfg.link_model != "statistical" && cfg.link_model != "limiting")
        throw std::invalid_argument("model must be 'statistical' or 'limiting', got '" +
                                    cfg.link_model + "'");
    if (cfg.experiment == ExperimentKind::convergence && cfg.link_model != "limiting")
        throw std::invalid_argument("the convergence experiment requires model = limiting");
    if (needs_drops && cfg.link_model != "statistical")
        throw std::invalid_argument("experiment " + to_string(cfg.experiment) +
                                    " requires model = statistical");

    if (cfg.link_model == "limiting")
    {
        if (cfg.profile < 1 || cfg.profile > 3)
            throw std::invalid_argument("profile must be 1, 2 or 3");
        for (arma::uword n : cfg.n_values)
            if (n > 2)
                throw std::invalid_argument("the limiting gain model supports at most 2 clusters, "
                                            "got N=" + std::to_string(n));
    }

    if (cfg.distance_unit != "wavelength" && cfg.distance_unit != "meter")
        throw std::invalid_argument("distance_unit must be 'wavelength' or 'meter', got '" +
                                    cfg.distance_unit + "'");
    if (cfg.correlated || cfg.experiment == ExperimentKind::lambda_table)
    {
        if (!(cfg.corr_a > 0))
            throw std::invalid_argument("corr_a must be positive");
        if (!(cfg.side_length_m > 0))
            throw std::invalid_argument("side_length_m must be positive");
        if (!(cfg.carrier_freq_hz > 0))
            throw std::invalid_argument("carrier_freq_hz must be positive");
    }
    if (!(cfg.r_pol >= 0.0 && cfg.r_pol < 1.0))
        throw std::invalid_argument("r_pol must lie in [0, 1), got " + fmt_num(cfg.r_pol));

    if (needs_drops)
    {
        if (cfg.n_drops < 1)
            throw std::invalid_argument("n_drops must be at least 1");
        if (!(cfg.drop.d_max_m > cfg.drop.d_min_m))
            throw std::invalid_argument("d_max_m must exceed d_min_m");
        if (!(cfg.drop.d_min_m >= 0))
            throw std::invalid_argument("d_min_m must be nonnegative");
        if (!(cfg.drop.shadow_sigma_db >= 0))
            throw std::invalid_argument("shadow_sigma_db must be nonnegative");
        if (!(cfg.drop.pathloss_exponent > 0))
            throw std::invalid_argument("pathloss_exponent must be positive");
    }
    if (cfg.experiment != ExperimentKind::lambda_table &&
        !(from_db(cfg.drop.beta_max_db) > from_db(cfg.drop.beta_min_db) * (1.0 - 1e-12)))
    {
        if (cfg.drop.beta_max_db < cfg.drop.beta_min_db)
            throw std::invalid_argument("beta_max_db must be at least beta_min_db");
    }

    if (cfg.experiment == ExperimentKind::shadow_sweep && cfg.shadow_values.empty())
        throw std::invalid_argument("shadow_sweep requires a nonempty shadow_values list");

    if (cfg.experiment == ExperimentKind::lambda_table)
    {
        if (cfg.n_values.empty() || cfg.r_pol_values.empty())
            throw std::invalid_argument("lambda_table requires nonempty n_values and r_pol_values");
        for (double r : cfg.r_pol_values)
            if (!(r >= 0.0 && r < 1.0))
                throw std::invalid_argument("r_pol values must lie in [0, 1), got " + fmt_num(r));
        for (arma::uword n : cfg.n_values)
        {
            if (n == 0 || cfg.lambda_table_m % n != 0 || (cfg.lambda_table_m / n) % 2 != 0)
                throw std::invalid_argument(
                    "lambda_table_m must split into an even antenna count per cluster "
                    "(M=" + std::to_string(cfg.lambda_table_m) + ", N=" + std::to_string(n) + ")");
        }
    }
}

arma::uword effective_fading(const ExperimentConfig &cfg)
{
    if (cfg.n_fading > 0)
        return cfg.n_fading;
    switch (cfg.experiment)
    {
    case ExperimentKind::convergence:
        return 200;
    case ExperimentKind::error_cdf:
    case ExperimentKind::shadow_sweep:
        return 50;
    case ExperimentKind::sinr_cdf:
    case ExperimentKind::single_user_cdf:
        return cfg.fading_average ? 50 : 1;
    case ExperimentKind::lambda_table:
        return 1;
    }
    return 1;
}

// ---------------------------------------------------------------- parallel driver

unsigned resolve_thread_count()
{
    const char *env = std::getenv("MASSIM_THREADS");
    if (env != nullptr && *env != '\0')
    {
        char *end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == nullptr || *end != '\0' || v < 0)
            throw std::invalid_argument("MASSIM_THREADS must be a nonnegative integer, got '" +
                                        std::string(env) + "'");
        if (v > 0)
            return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for_index(arma::uword n, const std::function<void(arma::uword)> &fn)
{
    if (n == 0)
        return;
    unsigned workers = resolve_thread_count();
    if (workers > n)
        workers = static_cast<unsigned>(n);
    if (workers <= 1)
    {
        for (arma::uword i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<arma::uword> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto body = [&]()
    {
        for (;;)
        {
            arma::uword i = next.fetch_add(1);
            if (i >= n || failed.load())
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 0; t + 1 < workers; ++t)
        pool.emplace_back(body);
    body();
    for (auto &th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------- shared pieces

CdfSeries make_cdf(std::vector<double> samples,
                   std::vector<std::pair<std::string, std::string>> labels)
{
    if (samples.empty())
        throw std::invalid_argument("cannot build a CDF from zero samples");
    std::sort(samples.begin(), samples.end());
    CdfSeries s;
    s.labels = std::move(labels);
    s.values = arma::vec(samples);
    const double n = static_cast<double>(samples.size());
    s.probs = arma::regspace<arma::vec>(1.0, n) / n;
    return s;
}

TransmitCorrelation make_correlation(const ExperimentConfig &cfg, arma::uword m_per_cluster)
{
    if (!cfg.correlated)
        return identity_correlation(m_per_cluster);
    // "meter" counts grid distances in meters instead of carrier wavelengths, which is
    // the same as evaluating the wavelength rule at lambda = 1 m.
    const double freq = cfg.distance_unit == "meter" ? 299792458.0 : cfg.carrier_freq_hz;
    ArrayGeometry geom = build_geometry(m_per_cluster, cfg.side_length_m, freq);
    return build_rt(geom, cfg.corr_a, cfg.r_pol);
}

// Correlation shared across cells of equal per-cluster size.
static const TransmitCorrelation &cached_correlation(const ExperimentConfig &cfg,
                                                     arma::uword m_per_cluster,
                                                     std::map<arma::uword, TransmitCorrelation> &cache)
{
    auto it = cache.find(m_per_cluster);
    if (it == cache.end())
        it = cache.emplace(m_per_cluster, make_correlation(cfg, m_per_cluster)).first;
    return it->second;
}

static LimitInputs make_limit_inputs(const ExperimentConfig &cfg, double xi, double lb2,
                                     const BetaAverages &avg)
{
    LimitInputs in;
    in.rho_f = from_db(cfg.rho_f_db);
    in.alpha = cfg.alpha;
    in.xi = xi;
    in.lambda_bar_sq = lb2;
    in.noise_power = cfg.noise_power;
    in.averages = avg;
    return in;
}

static SystemConfig make_system(const ExperimentConfig &cfg, double xi)
{
    SystemConfig sys;
    sys.rho_f = from_db(cfg.rho_f_db);
    sys.xi = xi;
    sys.noise_power = cfg.noise_power;
    return sys;
}

// Rethrows model errors with the sweep cell attached so failures name their inputs.
template <typename Fn>
static void run_cell(arma::uword k, arma::uword n, double xi, Fn &&fn)
{
    try
    {
        fn();
    }
    catch (const std::runtime_error &e)
    {
        throw std::runtime_error(std::string(e.what()) + " (K=" + std::to_string(k) +
                                 ", N=" + std::to_string(n) + ", xi=" + fmt_num(xi) + ")");
    }
}

// Mean over realizations of the user-mean expected SINR for one drop.
static double mean_expected_sinr(std::mt19937_64 &eng, const LinkGains &gains,
                                 const TransmitCorrelation &corr, const SystemConfig &sys,
                                 arma::uword n_fading)
{
    double acc = 0;
    for (arma::uword r = 0; r < n_fading; ++r)
    {
        arma::cx_mat g = sample_channel(eng, gains, corr);
        arma::cx_mat g_hat = apply_imperfect_csi(eng, g, sys.xi, gains, corr);
        SinrReport rep = expected_sinr(g_hat, gains, corr, sys);
        acc += arma::mean(rep.per_user_sinr);
    }
    return acc / static_cast<double>(n_fading);
}

// ---------------------------------------------------------------- experiments

std::vector<ConvergenceRow> run_convergence(const ExperimentConfig &cfg)
{
    validate_config(cfg);
    const double beta_min = from_db(cfg.drop.beta_min_db);
    const double beta_max = from_db(cfg.drop.beta_max_db);
    const arma::uword n_fading = effective_fading(cfg);

    std::vector<ConvergenceRow> rows;
    std::map<arma::uword, TransmitCorrelation> cache;
    std::uint64_t stream = 0;

    for (arma::uword n : cfg.n_values)
        for (double xi : cfg.xi_values)
            for (arma::uword k : cfg.k_values)
                run_cell(k, n, xi, [&]()
                {
                    const arma::uword m_per = total_antennas(cfg.alpha, k) / n;
                    const TransmitCorrelation &corr = cached_correlation(cfg, m_per, cache);
                    const double lb2 = lambda_bar_sq(corr);

                    LinkGains gains = limiting_profile(k, beta_min, beta_max, n, cfg.profile);
                    BetaAverages avg = beta_averages(gains);
                    arma::vec lim = limit_sinr(make_limit_inputs(cfg, xi, lb2, avg));

                    SystemConfig sys = make_system(cfg, xi);
                    arma::vec user_mean(n_fading);
                    const std::uint64_t base = stream;
                    parallel_for_index(n_fading, [&](arma::uword r)
                    {
                        auto eng = make_substream(cfg.seed, base + r);
                        arma::cx_mat g = sample_channel(eng, gains, corr);
                        arma::cx_mat g_hat = apply_imperfect_csi(eng, g, xi, gains, corr);
                        SinrReport rep = expected_sinr(g_hat, gains, corr, sys);
                        user_mean(r) = arma::mean(rep.per_user_sinr);
                    });
                    stream += n_fading;

                    ConvergenceRow row;
                    row.k_users = k;
                    row.n_clusters = n;
                    row.xi = xi;
                    row.mean_sinr_db = to_db(arma::mean(user_mean));
                    row.std_sinr_db = n_fading > 1
                        ? arma::stddev(arma::vec(10.0 * arma::log10(user_mean)))
                        : 0.0;
                    row.limit_db = to_db(arma::mean(lim));
                    rows.push_back(row);
                });
    return rows;
}

std::vector<CdfSeries> run_error_cdf(const ExperimentConfig &cfg)
{
    validate_config(cfg);
    const arma::uword n_fading = effective_fading(cfg);

    std::vector<CdfSeries> series;
    std::map<arma::uword, TransmitCorrelation> cache;
    std::uint64_t stream = 0;

    for (arma::uword n : cfg.n_values)
        for (double xi : cfg.xi_values)
            for (arma::uword k : cfg.k_values)
                run_cell(k, n, xi, [&]()
                {
                    const arma::uword m_per = total_antennas(cfg.alpha, k) / n;
                    const TransmitCorrelation &corr = cached_correlation(cfg, m_per, cache);
                    const double lb2 = lambda_bar_sq(corr);

                    DropConfig drop = cfg.drop;
                    drop.n_clusters = n;
                    drop.n_users = k;
                    SystemConfig sys = make_system(cfg, xi);

                    std::vector<double> vals(cfg.n_drops);
                    const std::uint64_t base = stream;
                    parallel_for_index(cfg.n_drops, [&](arma::uword d)
                    {
                        auto eng = make_substream(cfg.seed, base + d);
                        StatisticalDrop sd = statistical_drop(eng, drop);
                        BetaAverages avg = beta_averages(sd.gains);
                        const double lim =
                            arma::mean(limit_sinr(make_limit_inputs(cfg, xi, lb2, avg)));
                        const double sim =
                            mean_expected_sinr(eng, sd.gains, corr, sys, n_fading);
                        vals[d] = std::abs(lim - sim) / sim * 100.0;
                    });
                    stream += cfg.n_drops;

                    series.push_back(make_cdf(std::move(vals),
                                              {{"K", std::to_string(k)},
                                               {"N", std::to_string(n)},
                                               {"xi", fmt_num(xi)}}));
                });
    return series;
}

std::vector<CdfSeries> run_shadow_sweep(const ExperimentConfig &cfg)
{
    validate_config(cfg);
    const arma::uword n_fading = effective_fading(cfg);
    const arma::uword k = cfg.k_values.front();
    const arma::uword n = cfg.n_values.front();
    const double xi = cfg.xi_values.front();

    std::vector<CdfSeries> series;
    std::map<arma::uword, TransmitCorrelation> cache;
    std::uint64_t stream = 0;

    for (double sigma : cfg.shadow_values)
        run_cell(k, n, xi, [&]()
        {
            const arma::uword m_per = total_antennas(cfg.alpha, k) / n;
            const TransmitCorrelation &corr = cached_correlation(cfg, m_per, cache);

            DropConfig drop = cfg.drop;
            drop.n_clusters = n;
            drop.n_users = k;
            drop.shadow_sigma_db = sigma;
            SystemConfig sys = make_system(cfg, xi);

            std::vector<double> vals(cfg.n_drops);
            const std::uint64_t base = stream;
            parallel_for_index(cfg.n_drops, [&](arma::uword d)
            {
                auto eng = make_substream(cfg.seed, base + d);
                StatisticalDrop sd = statistical_drop(eng, drop);
                vals[d] = to_db(mean_expected_sinr(eng, sd.gains, corr, sys, n_fading));
            });
            stream += cfg.n_drops;

            series.push_back(make_cdf(std::move(vals),
                                      {{"K", std::to_string(k)},
                                       {"N", std::to_string(n)},
                                       {"xi", fmt_num(xi)},
                                       {"sigma_db", fmt_num(sigma)}}));
        });
    return series;
}

std::vector<CdfSeries> run_sinr_cdf(const ExperimentConfig &cfg, SinrCdfMode mode)
{
    validate_config(cfg);
    const arma::uword n_fading = effective_fading(cfg);

    std::vector<CdfSeries> series;
    std::map<arma::uword, TransmitCorrelation> cache;
    std::uint64_t stream = 0;

    for (arma::uword n : cfg.n_values)
        for (double xi : cfg.xi_values)
            for (arma::uword k : cfg.k_values)
                run_cell(k, n, xi, [&]()
                {
                    const arma::uword m_per = total_antennas(cfg.alpha, k) / n;
                    const TransmitCorrelation &corr = cached_correlation(cfg, m_per, cache);

                    DropConfig drop = cfg.drop;
                    drop.n_clusters = n;
                    drop.n_users = k;
                    SystemConfig sys = make_system(cfg, xi);

                    std::vector<double> vals(cfg.n_drops);
                    const std::uint64_t base = stream;
                    parallel_for_index(cfg.n_drops, [&](arma::uword d)
                    {
                        auto eng = make_substream(cfg.seed, base + d);
                        StatisticalDrop sd = statistical_drop(eng, drop);
                        double acc = 0;
                        for (arma::uword r = 0; r < n_fading; ++r)
                        {
                            arma::cx_mat g = sample_channel(eng, sd.gains, corr);
                            arma::cx_mat g_hat = apply_imperfect_csi(eng, g, xi, sd.gains, corr);
                            SinrReport rep = expected_sinr(g_hat, sd.gains, corr, sys);
                            acc += mode == SinrCdfMode::mean_user
                                       ? arma::mean(rep.per_user_sinr)
                                       : rep.per_user_sinr(0); // Tagged user, random per drop
                        }
                        vals[d] = to_db(acc / static_cast<double>(n_fading));
                    });
                    stream += cfg.n_drops;

                    series.push_back(make_cdf(std::move(vals),
                                              {{"K", std::to_string(k)},
                                               {"N", std::to_string(n)},
                                               {"xi", fmt_num(xi)}}));
                });
    return series;
}

// Reference grid for the correlation table: mean squared eigenvalue targets over
// cluster counts and cross-polarization levels at M = 1000 total antennas.
namespace
{
constexpr arma::uword ref_n[4] = {1, 2, 5, 10};
constexpr double ref_rpol[5] = {0.1, 0.2, 0.3, 0.4, 0.5};
constexpr double ref_val[4][5] = {
    {28.71, 29.57, 30.99, 32.98, 35.54},
    {13.95, 14.36, 15.05, 16.02, 17.26},
    {1.42, 1.46, 1.53, 1.63, 1.75},
    {1.17, 1.21, 1.26, 1.34, 1.47},
};

double lookup_reference(arma::uword n, double r_pol)
{
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j)
            if (ref_n[i] == n && std::abs(ref_rpol[j] - r_pol) < 1e-9)
                return ref_val[i][j];
    return arma::datum::nan;
}
} // namespace

std::vector<LambdaRow> run_lambda_table(const ExperimentConfig &cfg)
{
    validate_config(cfg);
    std::vector<LambdaRow> rows;
    for (arma::uword n : cfg.n_values)
    {
        const arma::uword m_per = cfg.lambda_table_m / n;
        const double freq =
            cfg.distance_unit == "meter" ? 299792458.0 : cfg.carrier_freq_hz;
        ArrayGeometry geom = build_geometry(m_per, cfg.side_length_m, freq);
        for (double r_pol : cfg.r_pol_values)
        {
            try
            {
                TransmitCorrelation corr = build_rt(geom, cfg.corr_a, r_pol);
                LambdaRow row;
                row.n_clusters = n;
                row.r_pol = r_pol;
                row.m_antennas = m_per;
                row.value = lambda_bar_sq(corr);
                row.reference = cfg.lambda_table_m == 1000 ? lookup_reference(n, r_pol)
                                                           : arma::datum::nan;
                row.rel_dev_pct = std::isnan(row.reference)
                    ? arma::datum::nan
                    : (row.value - row.reference) / row.reference * 100.0;
                rows.push_back(row);
            }
            catch (const std::runtime_error &e)
            {
                throw std::runtime_error(std::string(e.what()) + " (N=" + std::to_string(n) +
                                         ", r_pol=" + fmt_num(r_pol) + ")");
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------- output

static void write_text_atomic(const std::string &path, const std::string &text)
{
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open output file '" + tmp.string() + "'");
        out << text;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

void write_convergence_csv(const std::string &path, const std::vector<ConvergenceRow> &rows)
{
    std::string text = "K,N,xi,mean_sinr_db,std_sinr_db,limit_db\n";
    for (const auto &r : rows)
    {
        text += std::to_string(r.k_users) + "," + std::to_string(r.n_clusters) + "," +
                fmt_num(r.xi) + "," + fmt_num(r.mean_sinr_db) + "," + fmt_num(r.std_sinr_db) +
                "," + fmt_num(r.limit_db) + "\n";
    }
    write_text_atomic(path, text);
}

void write_cdf_csv(const std::string &path, const std::vector<CdfSeries> &series,
                   const std::string &value_column)
{
    if (series.empty())
        throw std::invalid_argument("no CDF series to write");
    std::string text;
    for (const auto &[key, value] : series.front().labels)
    {
        (void)value;
        text += key + ",";
    }
    text += value_column + ",cdf\n";
    for (const auto &s : series)
    {
        std::string prefix;
        for (const auto &[key, value] : s.labels)
        {
            (void)key;
            prefix += value + ",";
        }
        for (arma::uword i = 0; i < s.values.n_elem; ++i)
            text += prefix + fmt_num(s.values(i)) + "," + fmt_num(s.probs(i)) + "\n";
    }
    write_text_atomic(path, text);
}

void write_lambda_csv(const std::string &path, const std::vector<LambdaRow> &rows)
{
    std::string text = "N,r_pol,m_antennas,lambda_bar_sq,reference,rel_dev_pct\n";
    for (const auto &r : rows)
    {
        text += std::to_string(r.n_clusters) + "," + fmt_num(r.r_pol) + "," +
                std::to_string(r.m_antennas) + "," + fmt_num(r.value) + "," +
                fmt_num(r.reference) + "," + fmt_num(r.rel_dev_pct) + "\n";
    }
    write_text_atomic(path, text);
}

static std::string join_nums(const std::vector<double> &v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + fmt_num(v[i]);
    return out;
}

static std::string join_uwords(const std::vector<arma::uword> &v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig &cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("experiment", to_string(cfg.experiment));
    out.emplace_back("alpha", fmt_num(cfg.alpha));
    out.emplace_back("rho_f_db", fmt_num(cfg.rho_f_db));
    out.emplace_back("noise_power", fmt_num(cfg.noise_power));
    out.emplace_back("k_values", join_uwords(cfg.k_values));
    out.emplace_back("n_values", join_uwords(cfg.n_values));
    out.emplace_back("xi_values", join_nums(cfg.xi_values));
    out.emplace_back("shadow_values", join_nums(cfg.shadow_values));
    out.emplace_back("r_pol_values", join_nums(cfg.r_pol_values));
    out.emplace_back("correlated", cfg.correlated ? "true" : "false");
    out.emplace_back("corr_a", fmt_num(cfg.corr_a));
    out.emplace_back("r_pol", fmt_num(cfg.r_pol));
    out.emplace_back("side_length_m", fmt_num(cfg.side_length_m));
    out.emplace_back("carrier_freq_hz", fmt_num(cfg.carrier_freq_hz));
    out.emplace_back("distance_unit", cfg.distance_unit);
    out.emplace_back("model", cfg.link_model);
    out.emplace_back("profile", std::to_string(cfg.profile));
    out.emplace_back("shadow_sigma_db", fmt_num(cfg.drop.shadow_sigma_db));
    out.emplace_back("pathloss_exponent", fmt_num(cfg.drop.pathloss_exponent));
    out.emplace_back("d_min_m", fmt_num(cfg.drop.d_min_m));
    out.emplace_back("d_max_m", fmt_num(cfg.drop.d_max_m));
    out.emplace_back("beta_max_db", fmt_num(cfg.drop.beta_max_db));
    out.emplace_back("beta_min_db", fmt_num(cfg.drop.beta_min_db));
    out.emplace_back("beta_floor", cfg.drop.beta_floor ? "true" : "false");
    out.emplace_back("region_radius_m", fmt_num(cfg.drop.region_radius_m));
    out.emplace_back("n_drops", std::to_string(cfg.n_drops));
    out.emplace_back("n_fading", std::to_string(cfg.n_fading));
    out.emplace_back("fading_average", cfg.fading_average ? "true" : "false");
    out.emplace_back("seed", std::to_string(cfg.seed));
    out.emplace_back("output", cfg.output_path);
    out.emplace_back("lambda_table_m", std::to_string(cfg.lambda_table_m));
    return out;
}

void write_json_sidecar(const std::string &path, const ExperimentConfig &cfg, double wall_time_s)
{
    nlohmann::ordered_json j;
    j["version"] = version_string;
    j["experiment"] = to_string(cfg.experiment);
    j["seed"] = cfg.seed;
    nlohmann::ordered_json jc;
    for (const auto &[key, value] : echo_config(cfg))
        jc[key] = value;
    j["config"] = jc;
    j["wall_time_s"] = wall_time_s;
    write_text_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- CLI

int cli_main(int argc, char **argv)
{
    CLI::App app{"Link-gain and SINR experiments for distributed massive MIMO downlink precoding"};
    app.set_version_flag("--version", std::string(version_string));

    std::string config_path;
    app.add_option("config", config_path, "Experiment config file with 'key = value' lines")
        ->required();
    std::string experiment_override;
    auto *opt_experiment =
        app.add_option("--experiment", experiment_override,
                       "Override the experiment kind from the config file");
    std::string seed_override;
    auto *opt_seed = app.add_option("--seed", seed_override, "Override the RNG seed");
    std::string drops_override;
    auto *opt_drops = app.add_option("--n-drops", drops_override, "Override the number of drops");
    std::string output_override;
    auto *opt_output = app.add_option("--output", output_override, "Override the output CSV path");
    std::vector<std::string> set_overrides;
    app.add_option("--set", set_overrides, "Extra key=value overrides, repeatable");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (*opt_experiment)
            apply_override(cfg, "experiment", experiment_override);
        if (*opt_seed)
            apply_override(cfg, "seed", seed_override);
        if (*opt_drops)
            apply_override(cfg, "n_drops", drops_override);
        if (*opt_output)
            cfg.output_path = output_override;
        for (const auto &kv : set_overrides)
        {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            apply_override(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
        }
        validate_config(cfg);

        const auto t0 = std::chrono::steady_clock::now();
        std::size_t n_rows = 0;
        switch (cfg.experiment)
        {
        case ExperimentKind::convergence:
        {
            auto rows = run_convergence(cfg);
            write_convergence_csv(cfg.output_path, rows);
            n_rows = rows.size();
            break;
        }
        case ExperimentKind::error_cdf:
        {
            auto series = run_error_cdf(cfg);
            write_cdf_csv(cfg.output_path, series, "error_pct");
            for (const auto &s : series)
                n_rows += s.values.n_elem;
            break;
        }
        case ExperimentKind::shadow_sweep:
        {
            auto series = run_shadow_sweep(cfg);
            write_cdf_csv(cfg.output_path, series, "mean_sinr_db");
            for (const auto &s : series)
                n_rows += s.values.n_elem;
            break;
        }
        case ExperimentKind::sinr_cdf:
        case ExperimentKind::single_user_cdf:
        {
            auto mode = cfg.experiment == ExperimentKind::sinr_cdf ? SinrCdfMode::mean_user
                                                                   : SinrCdfMode::single_user;
            auto series = run_sinr_cdf(cfg, mode);
            write_cdf_csv(cfg.output_path, series, "sinr_db");
            for (const auto &s : series)
                n_rows += s.values.n_elem;
            break;
        }
        case ExperimentKind::lambda_table:
        {
            auto rows = run_lambda_table(cfg);
            write_lambda_csv(cfg.output_path, rows);
            n_rows = rows.size();
            break;
        }
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_json_sidecar(cfg.output_path + ".meta.json", cfg, wall);
        std::printf("%s: wrote %zu rows to %s (%.1f s)\n", to_string(cfg.experiment).c_str(),
                    n_rows, cfg.output_path.c_str(), wall);
        return 0;
    }
    catch (const std::invalid_argument &e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace massim
