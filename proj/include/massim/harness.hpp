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

#ifndef massim_harness_H
#define massim_harness_H

#include "massim/mf.hpp"

#include <armadillo>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace massim
{

constexpr const char *version_string = "massim-1.0.0";

enum class ExperimentKind
{
    convergence,
    error_cdf,
    shadow_sweep,
    sinr_cdf,
    single_user_cdf,
    lambda_table
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string &name);

// Complete description of one experiment run; field values map 1:1 to config keys.
struct ExperimentConfig
{
    ExperimentKind experiment = ExperimentKind::convergence;

    // System scalars
    double alpha = 10.0;                 // Antennas per user, M = alpha * K
    double rho_f_db = 10.0;              // Transmit SNR, dB
    double noise_power = 1.0;

    // Sweep lists
    std::vector<arma::uword> k_values;
    std::vector<arma::uword> n_values;   // Cluster counts
    std::vector<double> xi_values;
    std::vector<double> shadow_values;   // Shadowing std devs, dB
    std::vector<double> r_pol_values;    // Cross-pol correlations for the table

    // Transmit correlation
    bool correlated = false;
    double corr_a = 4.0;
    double r_pol = 0.1;
    double side_length_m = 1.0;
    double carrier_freq_hz = 2.6e9;
    std::string distance_unit = "wavelength"; // "wavelength" or "meter"

    // Link gain model
    std::string link_model = "statistical";   // "statistical" or "limiting"
    int profile = 2;
    DropConfig drop;

    // Sampling
    arma::uword n_drops = 100;
    arma::uword n_fading = 0;            // 0 selects the per-experiment default
    bool fading_average = false;         // SINR CDFs: average fading per drop instead of one realization
    std::uint64_t seed = 1;
    std::string output_path = "out.csv";
    arma::uword lambda_table_m = 1000;   // Total antennas used for the correlation table
};

// Baseline configuration with the default sweeps of the given experiment.
ExperimentConfig default_config(ExperimentKind kind);

// Reads a flat "key = value" config file ('#' starts a comment). The experiment key
// selects the defaults; remaining keys override individual fields.
// Throws std::invalid_argument for unknown keys or malformed values.
ExperimentConfig parse_config_file(const std::string &path);

// Applies one key/value override to an existing configuration.
void apply_override(ExperimentConfig &cfg, const std::string &key, const std::string &value);

// Checks cross-field constraints (nonempty sweeps, alpha * K divisible by 2N, value
// ranges). Throws std::invalid_argument naming the violated constraint.
void validate_config(const ExperimentConfig &cfg);

// Fading realizations per drop after applying the experiment defaults: 200 for
// convergence, 50 for the error/shadow CDFs, and a single realization for the
// instantaneous SINR CDFs unless fading_average is set.
arma::uword effective_fading(const ExperimentConfig &cfg);

// Worker count: MASSIM_THREADS when set and positive, otherwise the hardware
// concurrency. Results never depend on the worker count.
unsigned resolve_thread_count();

// Runs fn(index) for every index in [0, n) on up to resolve_thread_count() workers.
// The first exception thrown by any worker is rethrown after all workers finish.
void parallel_for_index(arma::uword n, const std::function<void(arma::uword)> &fn);

// One empirical CDF with identifying labels (column name, value) in output order.
struct CdfSeries
{
    std::vector<std::pair<std::string, std::string>> labels;
    arma::vec values; // Sorted ascending
    arma::vec probs;  // (i + 1) / n
};

CdfSeries make_cdf(std::vector<double> samples,
                   std::vector<std::pair<std::string, std::string>> labels);

struct ConvergenceRow
{
    arma::uword k_users = 0;
    arma::uword n_clusters = 0;
    double xi = 1.0;
    double mean_sinr_db = 0;  // 10*log10 of the mean over realizations of the user-mean SINR
    double std_sinr_db = 0;   // Std over realizations of the user-mean SINR in dB
    double limit_db = 0;      // 10*log10 of the user-mean asymptotic SINR
};

struct LambdaRow
{
    arma::uword n_clusters = 0;
    double r_pol = 0;
    arma::uword m_antennas = 0;
    double value = 0;
    double reference = 0;     // Embedded target for the (N, r_pol) grid, NaN when absent
    double rel_dev_pct = 0;
};

enum class SinrCdfMode
{
    mean_user,
    single_user
};

// Mean SINR of the deterministic gain profile versus its analytic limit per (K, N, xi).
std::vector<ConvergenceRow> run_convergence(const ExperimentConfig &cfg);

// Per-drop relative deviation (percent) between the mean expected SINR and the
// drop's asymptotic value, as an empirical CDF per (K, N, xi) cell.
std::vector<CdfSeries> run_error_cdf(const ExperimentConfig &cfg);

// Mean-SINR CDF per shadowing standard deviation at fixed (K, N, xi).
std::vector<CdfSeries> run_shadow_sweep(const ExperimentConfig &cfg);

// SINR CDF over drops per (N, xi): the user-mean SINR, or one tagged user's SINR in
// single_user mode (the user is re-dropped with every drop).
std::vector<CdfSeries> run_sinr_cdf(const ExperimentConfig &cfg, SinrCdfMode mode);

// Mean squared correlation eigenvalue over the (N, r_pol) grid with embedded
// reference values for comparison.
std::vector<LambdaRow> run_lambda_table(const ExperimentConfig &cfg);

// Builds the per-cluster correlation for a run: identity when cfg.correlated is
// false; otherwise the exponential/x-pol model at the configured geometry. The
// "meter" distance unit interprets grid distances as wavelength counts directly.
TransmitCorrelation make_correlation(const ExperimentConfig &cfg, arma::uword m_per_cluster);

// CSV / JSON output. All writers are atomic (temp file + rename) and use full
// precision scientific notation.
void write_convergence_csv(const std::string &path, const std::vector<ConvergenceRow> &rows);
void write_cdf_csv(const std::string &path, const std::vector<CdfSeries> &series,
                   const std::string &value_column);
void write_lambda_csv(const std::string &path, const std::vector<LambdaRow> &rows);
void write_json_sidecar(const std::string &path, const ExperimentConfig &cfg, double wall_time_s);

// Flat key/value echo of a configuration (the sidecar payload and the test hook).
std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig &cfg);

// Entry point of the command line tool: parses flags, runs the experiment, writes
// outputs. Returns 0 on success, 1 on model/numerical errors, 2 on usage errors.
int cli_main(int argc, char **argv);

} // namespace massim

#endif
