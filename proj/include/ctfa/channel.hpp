// SPDX-License-Identifier: Apache-2.0
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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctfa/numerics.hpp"

namespace ctfa {

inline constexpr double kSpeedOfLight = 299792458.0;

enum class Side { tx, rx };

inline const char* to_string(Side s) { return s == Side::tx ? "tx" : "rx"; }

/// Physical and discretization parameters of one scenario. All lengths in
/// meters, times in seconds. `n_slots` is the last slot index N; a run
/// covers N + 1 samples.
struct ScenarioConfig {
  int n_tx = 2;
  int n_rx = 2;
  int l_tx = 5;
  int l_rx = 5;
  double wavelength = kSpeedOfLight / 7.5e9;
  double region_side = 3.0 * (kSpeedOfLight / 7.5e9);
  double min_separation = 0.5 * (kSpeedOfLight / 7.5e9);
  double power = 10.0;
  double noise_var = 1.0;
  double v_max = 0.016;
  double a_max = 0.6;
  double slot_len = 0.01;
  int n_slots = 50;
  double rician_k = 0.0;
  double coherence_time = 10.0;

  int elements(Side s) const { return s == Side::tx ? n_tx : n_rx; }
  int paths(Side s) const { return s == Side::tx ? l_tx : l_rx; }

  /// Throws Error(config) naming the offending field.
  void check() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Quasi-static multipath geometry: per-path angles and the L_r x L_t path
/// response matrix between the two region origins.
struct ChannelGeometry {
  std::vector<double> tx_elevations;
  std::vector<double> tx_azimuths;
  std::vector<double> rx_elevations;
  std::vector<double> rx_azimuths;
  ComplexMatrix path_response;
  std::uint64_t seed = 0;

  const std::vector<double>& elevations(Side s) const {
    return s == Side::tx ? tx_elevations : rx_elevations;
  }
  const std::vector<double>& azimuths(Side s) const {
    return s == Side::tx ? tx_azimuths : rx_azimuths;
  }
};

/// x sin(theta) cos(phi) + y cos(theta)
double propagation_offset(const Position2D& pos, double elevation, double azimuth);

/// Entry p is exp(j 2 pi rho_p / lambda).
ComplexVector field_response_vector(const Position2D& pos, std::span<const double> elevations,
                                    std::span<const double> azimuths, double wavelength);

/// Columns are the field response vectors of `positions`: L x N.
ComplexMatrix field_response_matrix(std::span<const Position2D> positions, Side side,
                                    const ChannelGeometry& geometry, double wavelength);

/// H = F(rx)^H Sigma G(tx), shape N_r x N_t.
ComplexMatrix assemble_channel(std::span<const Position2D> tx_positions,
                               std::span<const Position2D> rx_positions,
                               const ChannelGeometry& geometry, double wavelength);

/// Diagonal-Sigma simulation model: i.i.d. U[0, pi] angles and Rician path
/// gains. Requires l_tx == l_rx.
ChannelGeometry sample_geometry(const ScenarioConfig& config, std::uint64_t seed);

void to_json(nlohmann::json& j, const ChannelGeometry& g);
void from_json(const nlohmann::json& j, ChannelGeometry& g);

std::string geometry_to_json_string(const ChannelGeometry& g);
ChannelGeometry geometry_from_json_string(const std::string& text);

}  // namespace ctfa
