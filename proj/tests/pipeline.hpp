#pragma once

// Drives the whole CLI chain on the pipeline fixture: fixtures, mine,
// releases, label, both metric stages, assemble and experiment rq1.

#include "defectlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace defectlab::testing {

struct PipelineRun {
  int failed_step = -1;  // index into steps, -1 when every step exited 0
  std::string log;
  std::vector<std::string> artifacts;  // paths relative to the work directory
};

inline PipelineRun run_pipeline(const std::string& work, const std::string& seed = "1234") {
  namespace fs = std::filesystem;
  const fs::path w(work);
  fs::create_directories(w);
  const std::string repo = (w / "fx" / "pipeline").string();
  auto p = [&](const char* name) { return (w / name).string(); };

  const std::vector<std::vector<std::string>> steps = {
      {"fixtures", "--out", p("fx")},
      {"mine", "--repo", repo, "--out", p("history.jsonl")},
      {"releases", "--repo", repo, "--out", p("releases.csv")},
      {"label", "--history", p("history.jsonl"), "--repo", repo, "--releases", p("releases.csv"), "--out",
       p("labels.csv")},
      {"metrics", "process", "--history", p("history.jsonl"), "--labels", p("labels.csv"), "--releases",
       p("releases.csv"), "--out", p("process.csv")},
      {"metrics", "product", "--history", p("history.jsonl"), "--repo", repo, "--out", p("product.csv")},
      {"assemble", "--process", p("process.csv"), "--product", p("product.csv"), "--mode", "P+C",
       "--out", p("demo.csv")},
  };
  PipelineRun run;
  std::ostringstream log;
  auto exec = [&](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    log << "$";
    for (const auto& a : args) log << ' ' << a;
    log << "\n" << out.str() << err.str() << "exit " << code << "\n";
    return code;
  };
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (exec(steps[i]) != 0) {
      run.failed_step = static_cast<int>(i);
      run.log = log.str();
      return run;
    }
  std::ofstream(p("experiment.conf")) << "projects = demo.csv\nmodes = P, C, P+C\nlearners = lr, rf\n"
                                         "seed = 1\n";
  if (exec({"--seed", seed, "--config", p("experiment.conf"), "experiment", "--rq", "1", "--out",
            p("rq1")}) != 0)
    run.failed_step = static_cast<int>(steps.size());
  run.log = log.str();
  run.artifacts = {"history.jsonl", "history.jsonl.manifest.json", "releases.csv", "labels.csv",
                   "labels.csv.manifest.json", "process.csv", "process.csv.manifest.json",
                   "product.csv", "product.csv.manifest.json", "demo.csv", "demo.csv.manifest.json",
                   "rq1/results.csv", "rq1/ranks.csv", "rq1/rq2_variance.csv", "rq1/manifest.json"};
  return run;
}

}  // namespace defectlab::testing
