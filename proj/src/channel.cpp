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

#include "massim/channel.hpp"
#include "massim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace massim
{

arma::cx_mat sample_channel(std::mt19937_64 &eng, const LinkGains &gains, const TransmitCorrelation &corr)
{
    const arma::uword n = gains.beta.n_rows;
    const arma::uword k = gains.beta.n_cols;
    const arma::uword m_per = corr.dim();
    if (n == 0 || k == 0 || m_per == 0)
        throw std::invalid_argument("sample_channel: empty gains or correlation");
    if (gains.beta.min() < 0.0 || !gains.beta.is_finite())
        throw std::invalid_argument("sample_channel: link gains must be nonnegative and finite");

    arma::cx_mat g(n * m_per, k);
    arma::cx_mat h(m_per, k);
    for (arma::uword c = 0; c < n; c++)
    {
        fill_cn01(eng, h);
        arma::cx_mat block = corr.is_identity ? h : arma::cx_mat(corr.sqrt_matrix * h);
        const arma::rowvec sqrt_beta = arma::sqrt(gains.beta.row(c));
        block.each_row() %= arma::conv_to<arma::cx_rowvec>::from(sqrt_beta);
        g.rows(c * m_per, (c + 1) * m_per - 1) = block;
    }
    return g;
}

arma::cx_mat apply_imperfect_csi(std::mt19937_64 &eng, const arma::cx_mat &g, double xi,
                                 const LinkGains &gains, const TransmitCorrelation &corr)
{
    if (xi < 0.0 || xi > 1.0)
        throw std::invalid_argument("apply_imperfect_csi: xi must lie in [0, 1], got " + std::to_string(xi));
    if (g.n_rows != gains.beta.n_rows * corr.dim() || g.n_cols != gains.beta.n_cols)
        throw std::invalid_argument("apply_imperfect_csi: channel dimensions do not match gains/correlation");
    if (xi == 1.0)
        return g;
    return xi * g + std::sqrt(1.0 - xi * xi) * sample_channel(eng, gains, corr);
}

UserGainSpectrum user_gain_spectrum(arma::uword user, const LinkGains &gains,
                                    const TransmitCorrelation &corr)
{
    const arma::uword n = gains.beta.n_rows;
    const arma::uword m_per = corr.dim();
    if (user >= gains.beta.n_cols)
        throw std::invalid_argument("user_gain_spectrum: user index out of range");

    UserGainSpectrum spectrum;
    spectrum.cluster_gains = gains.beta.col(user);
    spectrum.q_eigenvalues.set_size(n * m_per);
    for (arma::uword c = 0; c < n; c++)
        spectrum.q_eigenvalues.subvec(c * m_per, (c + 1) * m_per - 1) = spectrum.cluster_gains(c) * corr.eigenvalues;
    return spectrum;
}

double quadratic_form_limit_check(std::mt19937_64 &eng, const UserGainSpectrum &spectrum,
                                  arma::uword m_total)
{
    if (spectrum.q_eigenvalues.n_elem != m_total || m_total == 0)
        throw std::invalid_argument("quadratic_form_limit_check: spectrum length does not match m_total");

    arma::cx_mat v(m_total, 1);
    fill_cn01(eng, v);
    const arma::vec mag_sq = arma::square(arma::abs(v.col(0)));
    return arma::dot(spectrum.q_eigenvalues, mag_sq) / static_cast<double>(m_total);
}

} // namespace massim
