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

#include "ctfa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "ctfa/errors.hpp"
#include "ctfa/kinematics.hpp"

namespace ctfa {

using ojson = nlohmann::ordered_json;

const char* to_string(Profile p) { return p == Profile::desk ? "desk" : "full"; }

int profile_slots(Profile p) { return p == Profile::desk ? 50 : 200; }

int profile_seed_count(Profile p) { return p == Profile::desk ? 20 : 50; }

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::config, fmt::format("{}: {}", path, what));
}

void reject_unknown(const nlohmann::json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) config_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
std::optional<T> read(const nlohmann::json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(path + "." + key, "wrong type");
  }
}

double power_for_snr(double snr_db, double noise_var) {
  return noise_var * std::pow(10.0, snr_db / 10.0);
}

ScenarioConfig parse_scenario(const nlohmann::json& doc, Profile profile) {
  ScenarioConfig c;
  const std::string p = "scenario";
  if (doc.is_null()) {
    c.n_slots = profile_slots(profile);
    return c;
  }
  reject_unknown(doc, p,
                 {"n_tx", "n_rx", "paths", "l_tx", "l_rx", "carrier_hz", "wavelength",
                  "region_side", "min_separation", "power", "snr_db", "noise_var", "v_max",
                  "a_max", "slot_len", "n_slots", "rician_k", "coherence_time"});
  if (doc.contains("carrier_hz") && doc.contains("wavelength")) {
    config_error(p + ".carrier_hz", "give either carrier_hz or wavelength, not both");
  }
  if (doc.contains("power") && doc.contains("snr_db")) {
    config_error(p + ".snr_db", "give either power or snr_db, not both");
  }
  if (doc.contains("paths") && (doc.contains("l_tx") || doc.contains("l_rx"))) {
    config_error(p + ".paths", "give either paths or l_tx/l_rx, not both");
  }
  if (auto v = read<int>(doc, p, "n_tx")) c.n_tx = *v;
  if (auto v = read<int>(doc, p, "n_rx")) c.n_rx = *v;
  if (auto v = read<int>(doc, p, "paths")) c.l_tx = c.l_rx = *v;
  if (auto v = read<int>(doc, p, "l_tx")) c.l_tx = *v;
  if (auto v = read<int>(doc, p, "l_rx")) c.l_rx = *v;
  if (auto v = read<double>(doc, p, "carrier_hz")) {
    if (!(*v > 0.0)) config_error(p + ".carrier_hz", "must be positive");
    c.wavelength = kSpeedOfLight / *v;
  }
  if (auto v = read<double>(doc, p, "wavelength")) c.wavelength = *v;
  c.region_side = 3.0 * c.wavelength;
  c.min_separation = 0.5 * c.wavelength;
  if (auto v = read<double>(doc, p, "region_side")) c.region_side = *v;
  if (auto v = read<double>(doc, p, "min_separation")) c.min_separation = *v;
  if (auto v = read<double>(doc, p, "noise_var")) c.noise_var = *v;
  c.power = power_for_snr(10.0, c.noise_var);
  if (auto v = read<double>(doc, p, "snr_db")) c.power = power_for_snr(*v, c.noise_var);
  if (auto v = read<double>(doc, p, "power")) c.power = *v;
  if (auto v = read<double>(doc, p, "v_max")) c.v_max = *v;
  if (auto v = read<double>(doc, p, "a_max")) c.a_max = *v;
  if (auto v = read<double>(doc, p, "slot_len")) c.slot_len = *v;
  c.n_slots = profile_slots(profile);
  if (auto v = read<int>(doc, p, "n_slots")) c.n_slots = *v;
  if (auto v = read<double>(doc, p, "rician_k")) c.rician_k = *v;
  if (auto v = read<double>(doc, p, "coherence_time")) c.coherence_time = *v;
  return c;
}

void check_scenario(const ScenarioConfig& c, const std::string& where) {
  try {
    c.check();
  } catch (const Error& e) {
    config_error(where, e.what());
  }
}

}  // namespace

ExperimentSpec parse_config_text(const std::string& text, std::optional<Profile> profile_override) {
  nlohmann::json doc;
  try {
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos ? nlohmann::json::object()
                                                                  : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, fmt::format("malformed document: {}", e.what()));
  }
  reject_unknown(doc, "",
                 {"scenario", "schemes", "seeds", "n_seeds", "sweep", "output_dir", "profile", "rule"});
  ExperimentSpec spec;
  if (auto v = read<std::string>(doc, "", "profile")) {
    if (*v == "desk") {
      spec.profile = Profile::desk;
    } else if (*v == "full") {
      spec.profile = Profile::full;
    } else {
      config_error("profile", "expected desk or full");
    }
  }
  if (profile_override) spec.profile = *profile_override;

  spec.scenario = parse_scenario(doc.contains("scenario") ? doc.at("scenario") : nlohmann::json(),
                                 spec.profile);
  check_scenario(spec.scenario, "scenario");

  if (doc.contains("schemes")) {
    const auto names = read<std::vector<std::string>>(doc, "", "schemes").value();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto s = scheme_from_string(names[i]);
      if (!s) config_error(fmt::format("schemes[{}]", i), fmt::format("unknown scheme '{}'", names[i]));
      if (std::find(spec.schemes.begin(), spec.schemes.end(), *s) != spec.schemes.end()) {
        config_error(fmt::format("schemes[{}]", i), "duplicate scheme");
      }
      spec.schemes.push_back(*s);
    }
  } else {
    spec.schemes = {Scheme::proposed, Scheme::t_ctfa, Scheme::linear1,
                    Scheme::linear2, Scheme::random, Scheme::fpa};
  }
  if (spec.schemes.empty()) config_error("schemes", "at least one scheme is required");
  if (std::find(spec.schemes.begin(), spec.schemes.end(), Scheme::fpa) == spec.schemes.end()) {
    config_error("schemes", "fpa must be included; gains are reported against it");
  }

  if (doc.contains("seeds") && doc.contains("n_seeds")) {
    config_error("seeds", "give either seeds or n_seeds, not both");
  }
  if (doc.contains("seeds")) {
    spec.seeds = read<std::vector<std::uint64_t>>(doc, "", "seeds").value();
  } else {
    int count = profile_seed_count(spec.profile);
    if (auto v = read<int>(doc, "", "n_seeds")) count = *v;
    if (count < 1) config_error("n_seeds", "must be at least 1");
    for (int i = 1; i <= count; ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (spec.seeds.empty()) config_error("seeds", "at least one seed is required");
  if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() != spec.seeds.size()) {
    config_error("seeds", "duplicate seed");
  }

  if (doc.contains("sweep")) {
    const auto& sw = doc.at("sweep");
    reject_unknown(sw, "sweep", {"rician_k", "paths", "snr_db"});
    SweepSpec s;
    if (auto v = read<std::vector<double>>(sw, "sweep", "rician_k")) s.rician_k = *v;
    if (auto v = read<std::vector<int>>(sw, "sweep", "paths")) s.paths = *v;
    if (auto v = read<std::vector<double>>(sw, "sweep", "snr_db")) s.snr_db = *v;
    for (const char* axis : {"rician_k", "paths", "snr_db"}) {
      if (sw.contains(axis) && sw.at(axis).empty()) {
        config_error(std::string("sweep.") + axis, "axis must not be empty");
      }
    }
    if (sw.empty()) config_error("sweep", "at least one axis is required");
    spec.sweep = s;
  }

  if (auto v = read<std::string>(doc, "", "output_dir")) spec.output_dir = *v;
  if (spec.output_dir.empty()) config_error("output_dir", "must not be empty");

  if (doc.contains("rule")) {
    const auto& r = doc.at("rule");
    reject_unknown(r, "rule", {"rel_tol", "max_outer", "inner_rel_tol", "max_inner"});
    if (auto v = read<double>(r, "rule", "rel_tol")) spec.rule.rel_tol = *v;
    if (auto v = read<int>(r, "rule", "max_outer")) spec.rule.max_outer = *v;
    if (auto v = read<double>(r, "rule", "inner_rel_tol")) spec.rule.inner_rel_tol = *v;
    if (auto v = read<int>(r, "rule", "max_inner")) spec.rule.max_inner = *v;
  }
  try {
    spec.rule.check();
  } catch (const Error& e) {
    config_error("rule", e.what());
  }
  for (const auto& pt : expand_sweep(spec)) {
    check_scenario(pt.scenario, fmt::format("sweep point {}", pt.index));
  }
  return spec;
}

ExperimentSpec parse_config(const std::string& path, std::optional<Profile> profile_override) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, fmt::format("{}: cannot open file", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), profile_override);
}

std::string serialize_spec(const ExperimentSpec& spec) {
  const ScenarioConfig& c = spec.scenario;
  ojson doc;
  doc["profile"] = to_string(spec.profile);
  doc["scenario"] = {{"n_tx", c.n_tx},
                     {"n_rx", c.n_rx},
                     {"l_tx", c.l_tx},
                     {"l_rx", c.l_rx},
                     {"wavelength", c.wavelength},
                     {"region_side", c.region_side},
                     {"min_separation", c.min_separation},
                     {"power", c.power},
                     {"noise_var", c.noise_var},
                     {"v_max", c.v_max},
                     {"a_max", c.a_max},
                     {"slot_len", c.slot_len},
                     {"n_slots", c.n_slots},
                     {"rician_k", c.rician_k},
                     {"coherence_time", c.coherence_time}};
  ojson schemes = ojson::array();
  for (Scheme s : spec.schemes) schemes.push_back(to_string(s));
  doc["schemes"] = std::move(schemes);
  doc["seeds"] = spec.seeds;
  if (spec.sweep) {
    ojson sw = ojson::object();
    if (!spec.sweep->rician_k.empty()) sw["rician_k"] = spec.sweep->rician_k;
    if (!spec.sweep->paths.empty()) sw["paths"] = spec.sweep->paths;
    if (!spec.sweep->snr_db.empty()) sw["snr_db"] = spec.sweep->snr_db;
    doc["sweep"] = std::move(sw);
  }
  doc["output_dir"] = spec.output_dir;
  doc["rule"] = {{"rel_tol", spec.rule.rel_tol},
                 {"max_outer", spec.rule.max_outer},
                 {"inner_rel_tol", spec.rule.inner_rel_tol},
                 {"max_inner", spec.rule.max_inner}};
  return doc.dump(2) + "\n";
}

std::vector<SweepPoint> expand_sweep(const ExperimentSpec& spec) {
  const ScenarioConfig& base = spec.scenario;
  const double base_snr = 10.0 * std::log10(base.power / base.noise_var);
  std::vector<double> ks = {base.rician_k};
  std::vector<int> ls = {base.l_tx};
  std::vector<std::optional<double>> snrs = {std::nullopt};
  if (spec.sweep) {
    if (!spec.sweep->rician_k.empty()) ks = spec.sweep->rician_k;
    if (!spec.sweep->paths.empty()) ls = spec.sweep->paths;
    if (!spec.sweep->snr_db.empty()) snrs.assign(spec.sweep->snr_db.begin(), spec.sweep->snr_db.end());
  }
  std::vector<SweepPoint> out;
  for (double k : ks) {
    for (int l : ls) {
      for (const auto& snr : snrs) {
        SweepPoint pt;
        pt.index = static_cast<int>(out.size());
        pt.scenario = base;
        pt.scenario.rician_k = k;
        if (spec.sweep && !spec.sweep->paths.empty()) pt.scenario.l_tx = pt.scenario.l_rx = l;
        pt.snr_db = base_snr;
        if (snr) {
          pt.snr_db = *snr;
          pt.scenario.power = power_for_snr(*snr, base.noise_var);
        }
        out.push_back(std::move(pt));
      }
    }
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::summary, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  // Keyed by sweep point, then by scheme in first-seen order.
  std::map<int, std::vector<std::string>> order;
  std::map<std::pair<int, std::string>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    auto& names = order[r.sweep_point];
    if (std::find(names.begin(), names.end(), r.scheme) == names.end()) names.push_back(r.scheme);
    if (r.status != "failed") groups[{r.sweep_point, r.scheme}].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& [point, names] : order) {
    const auto fpa = groups.find({point, "fpa"});
    if (fpa == groups.end() || fpa->second.empty()) {
      throw Error(ErrorKind::summary, fmt::format("sweep point {} has no fpa reference", point));
    }
    std::vector<double> ref;
    for (const auto* r : fpa->second) ref.push_back(r->throughput_bits);
    const double ref_median = quantile(ref, 0.5);
    if (!(ref_median > 0.0)) {
      throw Error(ErrorKind::summary, fmt::format("sweep point {} has zero fpa median", point));
    }
    for (const auto& name : names) {
      const auto g = groups.find({point, name});
      if (g == groups.end() || g->second.empty()) continue;
      std::vector<double> bits, iters;
      for (const auto* r : g->second) {
        bits.push_back(r->throughput_bits);
        iters.push_back(r->outer_iterations);
      }
      const ResultRow& first = *g->second.front();
      SummaryRow s;
      s.sweep_point = point;
      s.rician_k = first.rician_k;
      s.paths = first.paths;
      s.snr_db = first.snr_db;
      s.scheme = name;
      s.runs = static_cast<int>(bits.size());
      s.median_bits = quantile(bits, 0.5);
      s.q1_bits = quantile(bits, 0.25);
      s.q3_bits = quantile(bits, 0.75);
      s.gain_percent = name == "fpa" ? 0.0 : 100.0 * (s.median_bits - ref_median) / ref_median;
      s.median_iterations = quantile(iters, 0.5);
      out.push_back(s);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "scheme,seed,sweep_point,rician_k,paths,snr_db,throughput_bits,outer_iterations,"
         "converged,status,note\r\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(r.scheme), r.seed,
                       r.sweep_point, r.rician_k, r.paths, r.snr_db, r.throughput_bits,
                       r.outer_iterations, r.converged ? 1 : 0, r.status, csv_field(r.note));
  }
}

void write_timing_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "scheme,seed,sweep_point,wall_seconds\r\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{}\r\n", csv_field(r.scheme), r.seed, r.sweep_point,
                       r.wall_seconds);
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "sweep_point,rician_k,paths,snr_db,scheme,runs,median_bits,q1_bits,q3_bits,"
         "gain_percent,median_iterations\r\n";
  for (const auto& s : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\r\n", s.sweep_point, s.rician_k, s.paths,
                       s.snr_db, csv_field(s.scheme), s.runs, s.median_bits, s.q1_bits, s.q3_bits,
                       s.gain_percent, s.median_iterations);
  }
}

void write_convergence_csv(std::ostream& out, const std::vector<HistoryEntry>& history) {
  out << "iteration,h1,throughput_bits\n";
  for (const auto& e : history) out << fmt::format("{},{},{}\n", e.iteration, e.h1, e.throughput_bits);
}

namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  body(out);
  if (!out) throw Error(ErrorKind::io, fmt::format("write failed for {}", path.string()));
}

std::string violation_summary(const std::vector<Violation>& v) {
  const Violation& first = v.front();
  return fmt::format("{} violation(s); first: {} element {} slot {} by {:.3e}", v.size(),
                     to_string(first.kind), first.element, first.slot, first.magnitude);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, const RunControl& control) {
  namespace fs = std::filesystem;
  const auto points = expand_sweep(spec);
  const fs::path root(spec.output_dir);
  fs::create_directories(root);
  for (const auto& pt : points) {
    if (spec.sweep) fs::create_directories(root / fmt::format("point_{}", pt.index));
  }

  struct Job {
    const SweepPoint* point;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& pt : points) {
    for (auto seed : spec.seeds) jobs.push_back({&pt, seed});
  }

  std::mutex mu;
  std::vector<ResultRow> rows;
  auto emit = [&](const std::string& line) {
    if (!control.progress) return;
    std::lock_guard lock(mu);
    control.progress(line);
  };

  auto run_job = [&](const Job& job) {
    const ScenarioConfig& cfg = job.point->scenario;
    const fs::path dir = spec.sweep ? root / fmt::format("point_{}", job.point->index) : root;
    auto base_row = [&](Scheme s) {
      ResultRow r;
      r.scheme = to_string(s);
      r.seed = job.seed;
      r.sweep_point = job.point->index;
      r.rician_k = cfg.rician_k;
      r.paths = cfg.l_tx;
      r.snr_db = job.point->snr_db;
      return r;
    };
    std::vector<ResultRow> local;
    std::optional<ChannelGeometry> geometry;
    try {
      geometry = sample_geometry(cfg, job.seed);
      if (control.write_artifacts) {
        write_file(dir / fmt::format("geometry_{}.json", job.seed),
                   [&](std::ostream& o) { o << geometry_to_json_string(*geometry) << "\n"; });
      }
    } catch (const std::exception& e) {
      for (Scheme s : spec.schemes) {
        ResultRow r = base_row(s);
        r.status = "failed";
        r.note = e.what();
        local.push_back(r);
      }
    }
    std::optional<SchemeResult> proposed;
    for (Scheme s : spec.schemes) {
      if (!geometry) break;
      ResultRow r = base_row(s);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        RunOptions opt;
        opt.rule = spec.rule;
        opt.record_traces = static_cast<bool>(control.on_result);
        if (control.progress) {
          opt.progress = [&, s](const HistoryEntry& e) {
            emit(ojson{{"event", "iteration"},
                       {"scheme", to_string(s)},
                       {"seed", job.seed},
                       {"sweep_point", job.point->index},
                       {"iteration", e.iteration},
                       {"h1", e.h1},
                       {"throughput_bits", e.throughput_bits},
                       {"elapsed_seconds", e.elapsed_seconds}}
                     .dump());
          };
        }
        if (s == Scheme::linear1 && !proposed) {
          proposed = evaluate_scheme(Scheme::proposed, cfg, *geometry, opt, job.seed);
        }
        SchemeResult res = evaluate_scheme(s, cfg, *geometry, opt, job.seed,
                                           proposed ? &*proposed : nullptr);
        r.throughput_bits = res.throughput_bits;
        r.outer_iterations = res.outer_iterations;
        r.converged = res.converged;
        if (res.flagged) {
          r.status = "flagged";
          r.note = res.note;
        }
        std::vector<Violation> bad = validate(res.tx_plan, cfg);
        const auto bad_rx = validate(res.rx_plan, cfg);
        bad.insert(bad.end(), bad_rx.begin(), bad_rx.end());
        if (!bad.empty()) {
          r.status = "failed";
          r.note = "infeasible plan: " + violation_summary(bad);
        }
        if (control.write_artifacts) {
          for (const auto* plan : {&res.tx_plan, &res.rx_plan}) {
            write_file(dir / fmt::format("traj_{}_{}_{}.csv", to_string(s), job.seed,
                                         to_string(plan->side)),
                       [&](std::ostream& o) { write_plan_csv(o, *plan); });
          }
          write_file(dir / fmt::format("conv_{}_{}.csv", to_string(s), job.seed),
                     [&](std::ostream& o) { write_convergence_csv(o, res.history); });
        }
        if (control.on_result) {
          std::lock_guard lock(mu);
          control.on_result(JobInfo{job.point->index, job.seed}, res);
        }
        if (s == Scheme::proposed) proposed = std::move(res);
      } catch (const std::exception& e) {
        r.status = "failed";
        r.note = e.what();
      }
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      emit(ojson{{"event", "run"},
                 {"scheme", r.scheme},
                 {"seed", r.seed},
                 {"sweep_point", r.sweep_point},
                 {"throughput_bits", r.throughput_bits},
                 {"status", r.status}}
               .dump());
      local.push_back(std::move(r));
    }
    std::lock_guard lock(mu);
    rows.insert(rows.end(), local.begin(), local.end());
  };

  const int workers = std::clamp(control.workers, 1, std::max(1, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(jobs[i]);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Deterministic order regardless of worker scheduling.
  auto scheme_rank = [&](const std::string& name) {
    for (std::size_t i = 0; i < spec.schemes.size(); ++i) {
      if (name == to_string(spec.schemes[i])) return i;
    }
    return spec.schemes.size();
  };
  auto seed_rank = [&](std::uint64_t seed) {
    return static_cast<std::size_t>(std::find(spec.seeds.begin(), spec.seeds.end(), seed) -
                                    spec.seeds.begin());
  };
  std::sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(a.sweep_point, scheme_rank(a.scheme), seed_rank(a.seed)) <
           std::make_tuple(b.sweep_point, scheme_rank(b.scheme), seed_rank(b.seed));
  });

  ExperimentReport report;
  report.rows = rows;
  report.any_failed = std::any_of(rows.begin(), rows.end(),
                                  [](const ResultRow& r) { return r.status == "failed"; });
  write_file(root / "results.csv", [&](std::ostream& o) { write_results_csv(o, rows); });
  write_file(root / "timing.csv", [&](std::ostream& o) { write_timing_csv(o, rows); });
  try {
    report.summary = summarize(rows);
    write_file(root / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, report.summary); });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::summary) throw;
    report.any_failed = true;
    emit(ojson{{"event", "summary_error"}, {"message", e.what()}}.dump());
  }
  return report;
}

}  // namespace ctfa
