// Verify one built-in family and print its report as text and JSON.
//
//   usage_verify_one 6.1 [seed]

#include <cstdlib>
#include <iostream>

#include "pdegensol.hpp"

int main(int argc, char** argv) {
  const std::string id = argc > 1 ? argv[1] : "6.1";
  pdegensol::VerifyConfig cfg;
  if (argc > 2) cfg.seed = std::strtoull(argv[2], nullptr, 10);

  const auto& fam = pdegensol::get_family(id);
  auto report = pdegensol::verify_family(fam, cfg);
  std::cout << pdegensol::format_report(report, &fam) << "\n" << pdegensol::json(report).dump(2) << "\n";
  return report.verdict == pdegensol::Verdict::Pass ? 0 : 1;
}
