// Copyright 2026 The sessec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sessec/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sessec/error.hpp"
#include "sessec/model_checker.hpp"
#include "sessec/scenario.hpp"
#include "sessec/session_type.hpp"
#include "sessec/srp.hpp"

namespace sessec {

namespace {

struct RunFlags {
  std::string transport = "sim";
  bool secure = false;
  std::uint64_t seed = 1;
  bool json = false;
  std::string registry;
  int timeout_ms = 5000;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--transport", f.transport, "sim or tcp")->check(CLI::IsMember({"sim", "tcp"}));
  cmd->add_flag("--secure", f.secure, "credential-checking delegation over SRP-secured channels");
  cmd->add_option("--seed", f.seed, "scheduler seed of the simulated network");
  cmd->add_flag("--json", f.json, "machine-readable output");
  cmd->add_option("--registry", f.registry, "SRP verifier registry (default: the demo registry)");
  cmd->add_option("--timeout-ms", f.timeout_ms, "per-operation timeout")->check(CLI::PositiveNumber);
}

ScenarioOptions scenario_options(const RunFlags& f) {
  ScenarioOptions o;
  o.transport = f.transport == "tcp" ? TransportKind::Tcp : TransportKind::Sim;
  o.secure = f.secure;
  o.seed = f.seed;
  o.timeout = Millis(f.timeout_ms);
  if (!f.registry.empty()) o.registry = std::make_shared<const Registry>(Registry::load(f.registry));
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_check(const std::vector<std::string>& args, bool json, std::ostream& out, std::ostream& err) {
  std::string file = std::string(SESSEC_DATA_DIR) + "/purchase.sj";
  std::vector<std::string> names = args;
  if (!names.empty() && std::filesystem::is_regular_file(names.front())) {
    file = names.front();
    names.erase(names.begin());
  }
  if (names.size() == 1 || names.size() > 2) {
    err << "check: give a file, optionally followed by two protocol names\n";
    return kExitUsage;
  }
  std::vector<Protocol> protocols;
  try {
    protocols = parse_protocols(read_file(file));
  } catch (const Error& e) {
    err << file << ": " << e.what() << "\n";
    return kExitFailed;
  }
  nlohmann::json j;
  j["file"] = file;
  j["protocols"] = nlohmann::json::array();
  for (const auto& p : protocols) {
    j["protocols"].push_back({{"name", p.name}, {"type", render_type(p.type)}});
    if (!json) out << "protocol " << p.name << ": ok\n";
  }
  int rc = kExitOk;
  if (names.size() == 2) {
    auto find = [&](const std::string& n) -> const Protocol* {
      for (const auto& p : protocols)
        if (p.name == n) return &p;
      return nullptr;
    };
    const Protocol* a = find(names[0]);
    const Protocol* b = find(names[1]);
    for (const auto& [n, p] : {std::pair{names[0], a}, std::pair{names[1], b}}) {
      if (!p) {
        err << file << ": no protocol named " << n << "\n";
        return kExitFailed;
      }
    }
    bool ok = is_dual(a->type, b->type);
    j["pair"] = {{"left", names[0]}, {"right", names[1]}, {"dual", ok}};
    if (!json) out << names[0] << " / " << names[1] << ": " << (ok ? "dual" : "not dual") << "\n";
    if (!ok) rc = kExitFailed;
  }
  if (json) out << j.dump(2) << "\n";
  return rc;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Session delegation with credential checking: protocol checker, demo, attack and model checker"};
  app.name("sessec");
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "parse protocol declarations; with two names, check duality");
  std::vector<std::string> check_args;
  bool check_json = false;
  check->add_option("args", check_args, "[FILE] [NAME NAME]");
  check->add_flag("--json", check_json, "machine-readable output");

  // demo
  auto* demo = app.add_subcommand("demo", "run the online purchase between customer, vendor and payment handler");
  RunFlags demo_flags;
  int items = 2;
  std::string choice = "CHECKOUT";
  add_run_flags(demo, demo_flags);
  demo->add_option("--items", items, "products the customer adds")->check(CLI::NonNegativeNumber);
  demo->add_option("--choice", choice, "CHECKOUT or EXIT")->check(CLI::IsMember({"CHECKOUT", "EXIT"}));

  // attack
  auto* attack = app.add_subcommand("attack", "run the purchase with an attacker going after the reconnection");
  RunFlags attack_flags;
  std::string attack_mode;
  bool leak = false;
  int runs = 1;
  add_run_flags(attack, attack_flags);
  attack->add_option("mode", attack_mode, "original or secure")->required()->check(CLI::IsMember({"original", "secure"}));
  attack->add_flag("--leak-cred", leak, "hand the delegation credential to the attacker out of band");
  attack->add_option("--runs", runs, "repeat with seeds seed..seed+runs-1")->check(CLI::PositiveNumber);

  // modelcheck
  auto* mc = app.add_subcommand("modelcheck", "explore the delegation protocol model and check properties");
  std::string mc_mode;
  std::vector<std::string> mc_props;
  bool mc_attacker = false, mc_all = false, mc_json = false, mc_leak = false, mc_replay = false;
  int mc_k = 0;
  std::size_t bound = 1'000'000;
  mc->add_option("mode", mc_mode, "original or secure")->required()->check(CLI::IsMember({"original", "secure"}));
  mc->add_option("properties", mc_props, "properties to check (default: all)");
  mc->add_flag("--attacker", mc_attacker, "include the network attacker");
  mc->add_flag("--all", mc_all, "check every property");
  mc->add_option("--k", mc_k, "unacknowledged frames at delegation time")->check(CLI::Range(0, 2));
  mc->add_flag("--leak-cred", mc_leak, "the attacker learns the credential out of band");
  mc->add_option("--bound", bound, "maximum number of states")->check(CLI::PositiveNumber);
  mc->add_flag("--json", mc_json, "machine-readable output");
  mc->add_flag("--replay", mc_replay, "replay each witness on the simulated network");

  // register
  auto* reg = app.add_subcommand("register", "add an SRP account to a verifier registry file");
  std::string reg_path, reg_user, reg_pass, reg_group = "rfc5054-1024";
  reg->add_option("--registry", reg_path, "registry file (created if missing)")->required();
  reg->add_option("user", reg_user)->required();
  reg->add_option("password", reg_pass)->required();
  reg->add_option("--group", reg_group, "rfc5054-1024 or rfc5054-2048");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) return cmd_check(check_args, check_json, out, err);

    if (*demo) {
      auto rep = run_purchase(scenario_options(demo_flags), items, choice == "CHECKOUT");
      out << (demo_flags.json ? report_to_json(rep) + "\n" : report_to_text(rep));
      return rep.outcome == RunOutcome::Completed && rep.errors.empty() ? kExitOk : kExitFailed;
    }

    if (*attack) {
      if (attack_flags.transport != "sim") {
        err << "attack: the attacker runs on the simulated network only\n";
        return kExitUsage;
      }
      attack_flags.secure = attack_mode == "secure";
      auto opts = scenario_options(attack_flags);
      opts.attack = interception_attack(attack_flags.secure, leak);
      if (runs == 1) {
        auto rep = run_purchase(opts, 1, true);
        out << (attack_flags.json ? report_to_json(rep) + "\n" : report_to_text(rep));
        return kExitOk;
      }
      std::map<std::string, int> tally;
      for (int i = 0; i < runs; ++i) {
        opts.seed = attack_flags.seed + static_cast<std::uint64_t>(i);
        ++tally[std::string(outcome_name(run_purchase(opts, 1, true).outcome))];
      }
      if (attack_flags.json) {
        out << nlohmann::json{{"mode", attack_mode}, {"runs", runs}, {"outcomes", tally}}.dump(2) << "\n";
      } else {
        for (const auto& [o, n] : tally) out << o << " " << n << "/" << runs << "\n";
      }
      return kExitOk;
    }

    if (*mc) {
      ModelParams p;
      p.mode = mc_mode == "secure" ? ProtocolMode::Secure : ProtocolMode::Original;
      p.attacker = mc_attacker;
      p.k = mc_k;
      p.caps.leaked_credential = mc_leak;
      p.bound = bound;
      std::vector<Property> props;
      if (mc_all || mc_props.empty()) {
        props = all_properties();
      } else {
        for (const auto& n : mc_props) props.push_back(property_from_name(n));
      }
      ProtocolModel model(p);
      std::vector<Verdict> verdicts;
      bool all_hold = true;
      for (Property prop : props) {
        verdicts.push_back(model.check(prop));
        all_hold = all_hold && verdicts.back().holds;
      }
      if (mc_json) {
        out << verdicts_to_json(p, verdicts) << "\n";
      } else {
        out << "model: " << mode_name(p.mode) << (p.attacker ? ", attacker" : ", no attacker") << ", k=" << p.k
            << (p.caps.leaked_credential ? ", leaked credential" : "") << "\n";
        for (const auto& v : verdicts) {
          out << verdict_to_text(v);
          if (mc_replay && !v.holds) {
            auto rep = replay_witness(p, v);
            out << "  replay on the simulated network: " << outcome_name(rep.outcome) << "\n";
          }
        }
      }
      return all_hold ? kExitOk : kExitFailed;
    }

    if (*reg) {
      Registry r;
      if (std::filesystem::exists(reg_path)) r = Registry::load(reg_path);
      r.add(register_user(SrpGroup::by_name(reg_group), reg_user, reg_pass));
      r.save(reg_path);
      out << "registered " << reg_user << " in " << reg_path << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == Errc::BoundExceeded) return kExitBound;
    if (e.code() == Errc::InvalidArgument) return kExitUsage;
    return kExitFailed;
  }
  return kExitUsage;
}

}  // namespace sessec
