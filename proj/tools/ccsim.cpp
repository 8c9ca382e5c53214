/*
 * Copyright (c) 2026, the ccsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccsim/adversary.hpp"
#include "ccsim/checkers.hpp"
#include "ccsim/json_io.hpp"
#include "ccsim/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ccsim;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct CommonFlags {
  WorkloadSpec spec;
  std::string protocol = "async-visible";
  std::string out = "runs";
  std::string config;
  bool as_json = false;
};

void add_workload_flags(CLI::App* cmd, CommonFlags& f, bool seed_required) {
  cmd->add_option("--protocol", f.protocol, "registered protocol name");
  cmd->add_option("--clients", f.spec.clients, "client count");
  cmd->add_option("--servers", f.spec.servers, "server count");
  cmd->add_option("--objects", f.spec.objects, "object count");
  cmd->add_option("--ops", f.spec.ops_per_client, "operations per client");
  cmd->add_option("--write-ratio", f.spec.write_ratio, "fraction of write transactions");
  cmd->add_option("--rot-size", f.spec.rot_size, "objects per read-only transaction");
  cmd->add_option("--write-txn-size", f.spec.write_txn_size,
                  "objects per write transaction (needs a generic protocol above 1)");
  auto* seed = cmd->add_option("--seed", f.spec.seed, "workload and schedule seed");
  if (seed_required) seed->required();
  cmd->add_option("--delay-min", f.spec.delay_min, "minimum message delay (ticks)");
  cmd->add_option("--delay-max", f.spec.delay_max, "maximum message delay (ticks)");
  cmd->add_option("--u", f.spec.u, "ts-global delay bound");
  cmd->add_option("--sync-rounds", f.spec.sync_rounds, "fast-visible sync rounds");
  cmd->add_option("--horizon", f.spec.horizon, "tick horizon");
  cmd->add_option("--out", f.out, "run artifact directory");
  cmd->add_option("--config", f.config, "JSON config file (flags not given on the command line)");
  cmd->add_flag("--json", f.as_json, "machine-readable output");
}

void apply_config(CLI::App* cmd, CommonFlags& f) {
  if (f.config.empty()) return;
  json cfg = json::parse(read_file(f.config));
  auto set_if_default = [&](const std::string& flag, auto& target) {
    using T = std::decay_t<decltype(target)>;
    if (cfg.contains(flag) && cmd->count("--" + flag) == 0)
      target = cfg.at(flag).get<T>();
  };
  set_if_default("protocol", f.protocol);
  set_if_default("clients", f.spec.clients);
  set_if_default("servers", f.spec.servers);
  set_if_default("objects", f.spec.objects);
  set_if_default("ops", f.spec.ops_per_client);
  set_if_default("write-ratio", f.spec.write_ratio);
  set_if_default("rot-size", f.spec.rot_size);
  set_if_default("write-txn-size", f.spec.write_txn_size);
  set_if_default("seed", f.spec.seed);
  set_if_default("delay-min", f.spec.delay_min);
  set_if_default("delay-max", f.spec.delay_max);
  set_if_default("u", f.spec.u);
  set_if_default("sync-rounds", f.spec.sync_rounds);
  set_if_default("horizon", f.spec.horizon);
  set_if_default("out", f.out);
}

fs::path run_dir(const std::string& out, const std::string& tag) {
  fs::path dir = fs::path(out) / tag;
  fs::create_directories(dir);
  return dir;
}

void write_artifacts(const fs::path& dir, const RunArtifacts& art) {
  write_file((dir / "history.jsonl").string(), history_to_jsonl(art.result.history));
  write_file((dir / "messages.jsonl").string(), message_log_to_jsonl(art.result.log));
  json world{{"clients", art.world.clients},
             {"servers", art.world.servers},
             {"protocol", art.world.protocol},
             {"u", art.world.pconfig.u},
             {"sync_rounds", art.world.pconfig.sync_rounds}};
  json objs = json::array();
  for (const auto& o : art.world.objects) objs.push_back(o.name);
  world["objects"] = objs;
  write_file((dir / "world.json").string(), world.dump(2) + "\n");
  write_file((dir / "schedule.json").string(), schedule_to_json(art.schedule).dump(2) + "\n");
  write_file((dir / "metrics.json").string(), art.metrics.to_json().dump(2) + "\n");
  json runj{{"quiescence_tick", art.result.quiescence_tick},
            {"end_tick", art.result.end_tick},
            {"probe_client", art.probe_client}};
  write_file((dir / "run.json").string(), runj.dump(2) + "\n");
}

std::map<ObjectId, int> placement_from_world(const json& world) {
  std::map<ObjectId, int> placement;
  int servers = world.at("servers").get<int>();
  int i = 0;
  for (const auto& o : world.at("objects"))
    placement[ObjectId{o.get<std::string>()}] = i++ % servers;
  return placement;
}

int cmd_simulate(CommonFlags& f) {
  RunArtifacts art = run_workload(f.spec, f.protocol);
  fs::path dir = run_dir(f.out, "simulate-" + f.protocol + "-seed" +
                                    std::to_string(f.spec.seed));
  write_artifacts(dir, art);
  bool pass = art.metrics.causal.pass && art.metrics.progress.pass;
  if (f.as_json) {
    json out{{"protocol", f.protocol},
             {"dir", dir.string()},
             {"pass", pass},
             {"metrics", art.metrics.to_json()}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "run " << dir.string() << "\n"
              << "  rots " << art.metrics.rots << ", writes " << art.metrics.writes
              << ", mean rot rounds " << art.metrics.mean_rot_rounds << "\n"
              << "  c<->s msgs " << art.metrics.client_server_msgs << ", s<->s msgs "
              << art.metrics.server_server_msgs << "\n"
              << "  causal: " << (art.metrics.causal.pass ? "pass" : "FAIL")
              << " (" << art.metrics.causal_samples << " samples), progress: "
              << (art.metrics.progress.pass ? "pass" : "FAIL") << "\n";
  }
  return pass ? kExitPass : kExitFail;
}

int cmd_compare(CommonFlags& f, const std::string& protocols_csv) {
  std::vector<std::string> protocols;
  std::string cur;
  for (char ch : protocols_csv) {
    if (ch == ',') {
      if (!cur.empty()) protocols.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) protocols.push_back(cur);
  if (protocols.empty()) throw CLI::ValidationError("--protocols", "no protocols given");

  json rows = json::array();
  for (const auto& p : protocols) {
    RunArtifacts art = run_workload(f.spec, p);
    fs::path dir = run_dir(f.out, "compare-" + p + "-seed" + std::to_string(f.spec.seed));
    write_artifacts(dir, art);
    rows.push_back(json{{"protocol", p},
                        {"mean_rot_rounds", art.metrics.mean_rot_rounds},
                        {"cs_per_op", art.metrics.client_server_per_op},
                        {"ss_per_write", art.metrics.server_server_per_write},
                        {"mean_visibility_lag", art.metrics.mean_visibility_lag},
                        {"causal_pass", art.metrics.causal.pass},
                        {"progress_pass", art.metrics.progress.pass}});
  }
  if (f.as_json) {
    std::cout << rows.dump(2) << "\n";
  } else {
    std::cout << "protocol,mean_rot_rounds,cs_per_op,ss_per_write,mean_visibility_lag,"
                 "causal_pass,progress_pass\n";
    for (const auto& r : rows)
      std::cout << r["protocol"].get<std::string>() << ","
                << r["mean_rot_rounds"].get<double>() << ","
                << r["cs_per_op"].get<double>() << ","
                << r["ss_per_write"].get<double>() << ","
                << r["mean_visibility_lag"].get<double>() << ","
                << (r["causal_pass"].get<bool>() ? "pass" : "fail") << ","
                << (r["progress_pass"].get<bool>() ? "pass" : "fail") << "\n";
  }
  for (const auto& r : rows)
    if (!r["causal_pass"].get<bool>() || !r["progress_pass"].get<bool>())
      return kExitFail;
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator and history checker for causally "
               "consistent transactional key-value storage"};
  app.require_subcommand(1);

  // simulate
  CommonFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "run a workload against one protocol");
  add_workload_flags(sim, sim_flags, true);

  // compare
  CommonFlags cmp_flags;
  std::string protocols_csv;
  auto* cmp = app.add_subcommand("compare", "run one workload against several protocols");
  cmp->add_option("--protocols", protocols_csv, "comma-separated protocol names")
      ->required();
  add_workload_flags(cmp, cmp_flags, true);

  // check
  auto* chk = app.add_subcommand("check", "run a checker over history files");
  std::string chk_history, chk_log, chk_checker, chk_world;
  TxnId chk_txn = kNoTxn;
  Tick chk_quiescence = 0;
  bool chk_json = false;
  chk->add_option("--history", chk_history, "history JSONL file")->required();
  chk->add_option("--checker", chk_checker, "causal | progress | fastness | oneversion")
      ->required();
  chk->add_option("--log", chk_log, "message log JSONL file");
  chk->add_option("--txn", chk_txn, "transaction id (fastness / oneversion)");
  chk->add_option("--quiescence", chk_quiescence, "quiescence tick (progress)");
  chk->add_option("--world", chk_world, "world.json (oneversion placement)");
  chk->add_flag("--json", chk_json, "machine-readable output");

  // adversary run
  auto* adv = app.add_subcommand("adversary", "scripted adversarial scenarios");
  auto* adv_run = adv->add_subcommand("run", "build and run one scenario");
  std::string adv_scenario, adv_protocol, adv_out = "runs";
  int adv_k = 6;
  Tick adv_u = 0;
  bool adv_json = false;
  adv_run->add_option("--scenario", adv_scenario, "eimp | e12")->required();
  adv_run->add_option("--protocol", adv_protocol, "registered protocol name")->required();
  adv_run->add_option("--k", adv_k, "eimp induction depth");
  adv_run->add_option("--u", adv_u, "ts-global delay bound");
  adv_run->add_option("--out", adv_out, "run artifact directory");
  adv_run->add_flag("--json", adv_json, "machine-readable output");

  // protocols
  auto* lst = app.add_subcommand("protocols", "list registered protocols");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  bool json_errors = sim_flags.as_json || cmp_flags.as_json || chk_json || adv_json;
  auto emit_error = [&](const std::string& kind, const std::string& what, int code) {
    if (json_errors)
      std::cout << json{{"error", kind}, {"what", what}, {"exit", code}}.dump() << "\n";
    else
      std::cerr << kind << ": " << what << "\n";
    return code;
  };

  try {
    if (sim->parsed()) {
      apply_config(sim, sim_flags);
      return cmd_simulate(sim_flags);
    }
    if (cmp->parsed()) {
      apply_config(cmp, cmp_flags);
      return cmd_compare(cmp_flags, protocols_csv);
    }
    if (lst->parsed()) {
      for (const auto& n : registered_protocols()) std::cout << n << "\n";
      return kExitPass;
    }
    if (chk->parsed()) {
      History h = history_from_jsonl(read_file(chk_history));
      MessageLog log;
      if (!chk_log.empty()) log = message_log_from_jsonl(read_file(chk_log));
      Verdict v;
      if (chk_checker == "causal") {
        v = check_causal_serialization(h);
      } else if (chk_checker == "progress") {
        v = check_progress(h, log, chk_quiescence);
      } else if (chk_checker == "fastness") {
        v = audit_fastness(h, log, chk_txn);
      } else if (chk_checker == "oneversion") {
        std::map<ObjectId, int> placement;
        if (!chk_world.empty())
          placement = placement_from_world(json::parse(read_file(chk_world)));
        v = check_one_version(h, log, chk_txn, placement);
      } else {
        throw CLI::ValidationError("--checker", "unknown checker " + chk_checker);
      }
      if (chk_json)
        std::cout << v.to_json().dump(2) << "\n";
      else
        std::cout << v.checker << ": " << (v.pass ? "pass" : "FAIL")
                  << (v.label.empty() ? "" : " (" + v.label + ")") << "\n"
                  << (v.witness.is_null() ? "" : v.witness.dump(2) + "\n");
      return v.pass ? kExitPass : kExitFail;
    }
    if (adv_run->parsed()) {
      ProtocolConfig cfg;
      cfg.u = adv_u;
      Scenario s = adv_scenario == "e12" ? scenario_e12(adv_protocol, cfg)
                   : adv_scenario == "eimp"
                       ? scenario_eimp(adv_k, adv_protocol, cfg)
                       : throw CLI::ValidationError("--scenario",
                                                    "unknown scenario " + adv_scenario);
      ScenarioReport r = run_scenario(s);
      fs::path dir = run_dir(adv_out, "adversary-" + adv_scenario + "-" + adv_protocol);
      write_file((dir / "report.json").string(), r.to_json().dump(2) + "\n");
      write_file((dir / "schedule.json").string(),
                 schedule_to_json(s.schedule).dump(2) + "\n");
      if (adv_json)
        std::cout << r.to_json().dump(2) << "\n";
      else
        std::cout << "scenario " << r.scenario << " vs " << r.protocol << ": fast="
                  << r.fast << " visible=" << r.visible << " consistent=" << r.consistent
                  << " progress=" << r.progress
                  << (r.note.empty() ? "" : " [" + r.note + "]") << "\n";
      return r.expected_match ? kExitPass : kExitFail;
    }
  } catch (const BudgetExceeded& e) {
    return emit_error("budget-exceeded", e.what(), kExitBudget);
  } catch (const CLI::ValidationError& e) {
    return emit_error("usage", e.what(), kExitUsage);
  } catch (const ProtocolShapeMismatch& e) {
    return emit_error("protocol-shape-mismatch", e.what(), kExitFail);
  } catch (const Error& e) {
    return emit_error("error", e.what(), kExitFail);
  }
  return kExitUsage;
}
