// Acceptance suite: one line per criterion, nonzero exit status on any failure.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "polaron/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace polaron;
  CLI::App app{"Acceptance criteria"};
  AcceptanceOptions options;
  std::string report_path;
  bool no_mutation = false;
  app.add_option("--only", options.criteria, "Criteria to run")->delimiter(',');
  app.add_option("--threads", options.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--report", report_path, "Write the JSON report here");
  app.add_flag("--no-mutation", no_mutation, "Skip the sign-flip mutation check");
  CLI11_PARSE(app, argc, argv);
  options.mutation_check = !no_mutation;

  const auto report = run_acceptance(options, [](const CriterionResult& r) { std::cout << summary_line(r) << std::endl; });
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    io::write_json(out, to_json(report));
  }
  std::cout << (report.passed() ? "acceptance: all criteria passed" : "acceptance: FAILED") << std::endl;
  return report.passed() ? 0 : 1;
}
