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

#include "ctfa/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctfa/errors.hpp"
#include "ctfa/random.hpp"

namespace ctfa {

namespace {

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::config, std::string(field) + " must be finite and strictly positive");
  }
}

void require_nonnegative(double value, const char* field) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::config, std::string(field) + " must be finite and non-negative");
  }
}

// Elements per row of the initial square-ish grid.
int grid_columns(int count) {
  int cols = 1;
  while (cols * cols < count) ++cols;
  return cols;
}

}  // namespace

void ScenarioConfig::check() const {
  if (n_tx < 1) throw Error(ErrorKind::config, "n_tx must be at least 1");
  if (n_rx < 1) throw Error(ErrorKind::config, "n_rx must be at least 1");
  if (l_tx < 1) throw Error(ErrorKind::config, "l_tx must be at least 1");
  if (l_rx < 1) throw Error(ErrorKind::config, "l_rx must be at least 1");
  if (n_slots < 0) throw Error(ErrorKind::config, "n_slots must be non-negative");
  require_positive(wavelength, "wavelength");
  require_positive(region_side, "region_side");
  require_positive(min_separation, "min_separation");
  require_positive(power, "power");
  require_positive(noise_var, "noise_var");
  // Zero caps are allowed: they freeze the elements, which reduces the
  // problem to the fixed-position case.
  require_nonnegative(v_max, "v_max");
  require_nonnegative(a_max, "a_max");
  require_positive(slot_len, "slot_len");
  require_nonnegative(rician_k, "rician_k");
  require_positive(coherence_time, "coherence_time");
  if (std::min(l_tx, l_rx) < std::max(n_tx, n_rx)) {
    throw Error(ErrorKind::config, "path counts must be at least the element counts (min(l_tx, l_rx) >= max(n_tx, n_rx))");
  }
  const double spacing = std::max(min_separation, 0.5 * wavelength);
  for (int count : {n_tx, n_rx}) {
    if (region_side < spacing * grid_columns(count)) {
      throw Error(ErrorKind::config, "region_side too small for the initial element grid");
    }
  }
}

double propagation_offset(const Position2D& pos, double elevation, double azimuth) {
  return pos.x() * std::sin(elevation) * std::cos(azimuth) + pos.y() * std::cos(elevation);
}

ComplexVector field_response_vector(const Position2D& pos, std::span<const double> elevations,
                                    std::span<const double> azimuths, double wavelength) {
  if (elevations.size() != azimuths.size()) contract_fail("angle lists differ in length");
  const double k = 2.0 * std::numbers::pi / wavelength;
  ComplexVector g(static_cast<Eigen::Index>(elevations.size()));
  for (std::size_t p = 0; p < elevations.size(); ++p) {
    g(static_cast<Eigen::Index>(p)) = std::polar(1.0, k * propagation_offset(pos, elevations[p], azimuths[p]));
  }
  return g;
}

ComplexMatrix field_response_matrix(std::span<const Position2D> positions, Side side,
                                    const ChannelGeometry& geometry, double wavelength) {
  const auto& el = geometry.elevations(side);
  const auto& az = geometry.azimuths(side);
  ComplexMatrix m(static_cast<Eigen::Index>(el.size()), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t k = 0; k < positions.size(); ++k) {
    m.col(static_cast<Eigen::Index>(k)) = field_response_vector(positions[k], el, az, wavelength);
  }
  return m;
}

ComplexMatrix assemble_channel(std::span<const Position2D> tx_positions,
                               std::span<const Position2D> rx_positions,
                               const ChannelGeometry& geometry, double wavelength) {
  const auto& sigma = geometry.path_response;
  if (sigma.rows() != static_cast<Eigen::Index>(geometry.rx_elevations.size()) ||
      sigma.cols() != static_cast<Eigen::Index>(geometry.tx_elevations.size())) {
    contract_fail("path response shape does not match the path counts");
  }
  const ComplexMatrix g = field_response_matrix(tx_positions, Side::tx, geometry, wavelength);
  const ComplexMatrix f = field_response_matrix(rx_positions, Side::rx, geometry, wavelength);
  ComplexMatrix h = f.adjoint() * sigma * g;
  if (!all_finite(h)) throw Error(ErrorKind::non_finite, "channel matrix");
  return h;
}

ChannelGeometry sample_geometry(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.l_tx != config.l_rx) {
    throw Error(ErrorKind::unsupported_model, "diagonal path response needs l_tx == l_rx");
  }
  const int paths = config.l_tx;
  ChannelGeometry geo;
  geo.seed = seed;
  auto draw_angles = [&](std::uint64_t stream) {
    CounterRng rng(seed, stream);
    std::vector<double> out(static_cast<std::size_t>(paths));
    for (auto& a : out) a = rng.uniform(0.0, std::numbers::pi);
    return out;
  };
  geo.tx_elevations = draw_angles(streams::tx_elevation);
  geo.tx_azimuths = draw_angles(streams::tx_azimuth);
  geo.rx_elevations = draw_angles(streams::rx_elevation);
  geo.rx_azimuths = draw_angles(streams::rx_azimuth);

  // Path gains are drawn from the same unit normals for every K so that
  // K sweeps compare like with like.
  CounterRng gains(seed, streams::path_gain);
  const double k = config.rician_k;
  geo.path_response = ComplexMatrix::Zero(paths, paths);
  for (int l = 0; l < paths; ++l) {
    double var = 1.0 / paths;
    if (k > 0.0) {
      var = (l == 0) ? k / (k + 1.0) : (paths > 1 ? 1.0 / ((k + 1.0) * (paths - 1)) : 0.0);
    }
    const double re = gains.normal();
    const double im = gains.normal();
    geo.path_response(l, l) = std::sqrt(var / 2.0) * cd(re, im);
  }
  return geo;
}

void to_json(nlohmann::json& j, const ChannelGeometry& g) {
  nlohmann::json sigma = nlohmann::json::array();
  for (Eigen::Index r = 0; r < g.path_response.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < g.path_response.cols(); ++c) {
      row.push_back({g.path_response(r, c).real(), g.path_response(r, c).imag()});
    }
    sigma.push_back(std::move(row));
  }
  j = nlohmann::json{{"seed", g.seed},
                     {"tx_elevations", g.tx_elevations},
                     {"tx_azimuths", g.tx_azimuths},
                     {"rx_elevations", g.rx_elevations},
                     {"rx_azimuths", g.rx_azimuths},
                     {"path_response", std::move(sigma)}};
}

void from_json(const nlohmann::json& j, ChannelGeometry& g) {
  g.seed = j.at("seed").get<std::uint64_t>();
  g.tx_elevations = j.at("tx_elevations").get<std::vector<double>>();
  g.tx_azimuths = j.at("tx_azimuths").get<std::vector<double>>();
  g.rx_elevations = j.at("rx_elevations").get<std::vector<double>>();
  g.rx_azimuths = j.at("rx_azimuths").get<std::vector<double>>();
  const auto& sigma = j.at("path_response");
  const auto rows = static_cast<Eigen::Index>(sigma.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(sigma.at(0).size()) : 0;
  g.path_response.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = sigma.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::io, "path_response rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = row.at(static_cast<std::size_t>(c));
      g.path_response(r, c) = cd(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
}

std::string geometry_to_json_string(const ChannelGeometry& g) {
  nlohmann::json j = g;
  return j.dump(2);
}

ChannelGeometry geometry_from_json_string(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<ChannelGeometry>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("geometry document: ") + e.what());
  }
}

}  // namespace ctfa
