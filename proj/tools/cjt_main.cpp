/*******************************************************************************
 * Copyright 2026 The cjt-engine Authors
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
 ******************************************************************************/

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cjt/engine.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

json stats_record(const std::string& command, const cjt::CommandResult& res) {
  json j;
  j["command"] = command;
  j["messages_computed"] = res.stats.messages_computed;
  j["messages_reused"] = res.stats.messages_reused;
  j["messages_updated"] = res.stats.messages_updated;
  j["messages_invalidated"] = res.stats.messages_invalidated;
  j["tuples_processed"] = res.stats.tuples_processed;
  j["wall_seconds"] = res.wall_seconds;
  return j;
}

void print_stats_line(const cjt::CommandResult& res) {
  std::cerr << "stats: computed=" << res.stats.messages_computed
            << " reused=" << res.stats.messages_reused
            << " updated=" << res.stats.messages_updated
            << " invalidated=" << res.stats.messages_invalidated
            << " tuples=" << res.stats.tuples_processed << " wall="
            << res.wall_seconds << "s\n";
}

int run_chain_bench_command(int r, int f, int d, uint64_t seed) {
  cjt::ChainBenchReport rep = cjt::run_chain_bench(r, f, d, seed);
  uint64_t full_join = rep.total_count;
  std::cout << "chain benchmark: r=" << rep.relations << " f=" << rep.fanout
            << " d=" << rep.domain << "\n"
            << "full join rows (total count): " << full_join << "\n"
            << "largest message rows: " << rep.max_message_rows << "\n"
            << "factorized/full ratio: "
            << (rep.max_message_rows
                    ? double(full_join) / double(rep.max_message_rows)
                    : 0.0)
            << "x\n"
            << "calibrate: " << rep.calibrate_seconds << "s, pivot query: "
            << rep.pivot_query_seconds << "s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factorized analytics over calibrated junction hypertrees"};

  std::string catalog;
  std::string script;
  std::string stats_json;
  std::string mode = "eager";
  std::string absorption = "off";
  bool prune_dangling = false;
  bool no_parallel = false;
  uint64_t seed = 42;

  app.add_option("--catalog", catalog, "catalog JSON path");
  app.add_option("--script", script,
                 "file with one command per line ('-' for stdin)");
  app.add_option("--stats-json", stats_json, "append per-command stats JSON");
  app.add_option("--mode", mode, "maintenance mode: eager|lazy")
      ->check(CLI::IsMember({"eager", "lazy"}));
  app.add_option("--absorption-cache", absorption, "on|off")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_flag("--prune-dangling", prune_dangling,
               "semi-join reduce multi-relation bags");
  app.add_flag("--no-parallel", no_parallel, "force serial kernels");
  app.add_option("--seed", seed, "seed for randomized choices");

  std::vector<std::string> command;
  app.add_option("command", command, "command and key=value arguments");

  CLI11_PARSE(app, argc, argv);

  if (no_parallel) {
    cjt::kernels::Policy p = cjt::kernels::policy();
    p.parallel = false;
    cjt::kernels::set_policy(p);
  }

  try {
    // bench-chain runs self-contained, without a catalog.
    if (!command.empty() && command[0] == "bench-chain") {
      int r = 6, f = 4, d = 64;
      for (size_t i = 1; i < command.size(); ++i) {
        auto eq = command[i].find('=');
        if (eq == std::string::npos) continue;
        std::string k = command[i].substr(0, eq);
        int v = std::stoi(command[i].substr(eq + 1));
        if (k == "r") r = v;
        if (k == "f") f = v;
        if (k == "d") d = v;
        if (k == "seed") seed = uint64_t(v);
      }
      return run_chain_bench_command(r, f, d, seed);
    }

    if (catalog.empty()) {
      std::cerr << "error: --catalog is required (except for bench-chain)\n";
      return 2;
    }

    cjt::SessionConfig cfg;
    cfg.mode = mode == "lazy" ? cjt::MaintenanceMode::lazy
                              : cjt::MaintenanceMode::eager;
    cfg.prune_dangling = prune_dangling;
    cfg.absorption_cache = absorption == "on";
    cfg.seed = seed;
    cjt::EngineSession session = cjt::EngineSession::load(catalog, cfg);

    json stats_log = json::array();
    auto run_one = [&](const std::string& line) {
      if (line.empty() || line[0] == '#') return;
      cjt::CommandResult res = session.run(line);
      std::cout << res.output;
      print_stats_line(res);
      if (!stats_json.empty()) stats_log.push_back(stats_record(line, res));
    };

    if (!script.empty()) {
      std::istream* in = &std::cin;
      std::ifstream file;
      if (script != "-") {
        file.open(script);
        if (!file.good()) {
          std::cerr << "error: cannot open script " << script << "\n";
          return 2;
        }
        in = &file;
      }
      std::string line;
      while (std::getline(*in, line)) run_one(line);
    } else if (!command.empty()) {
      std::ostringstream os;
      for (size_t i = 0; i < command.size(); ++i) {
        if (i) os << ' ';
        os << command[i];
      }
      run_one(os.str());
    } else {
      std::cerr << "error: give a command or --script\n";
      return 2;
    }

    if (!stats_json.empty()) {
      std::ofstream out(stats_json, std::ios::app);
      out << stats_log.dump() << "\n";
    }
  } catch (const cjt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
