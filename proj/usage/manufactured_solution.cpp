// Check a user-supplied family: the Liouville equation w_tx = exp(w) with
// its classical general solution, and a copy with a flipped sign that the
// verifier must reject.

#include <iostream>

#include "pdegensol.hpp"

namespace {

constexpr const char* kFamilies = R"(
id: liouville
vars: t, x
funcs: F/1, G/1
pde: w_tx - exp(w)
solution: ln(2*deriv(F, 1)(t)*deriv(G, 1)(x)/(F(t) + G(x))^2)
hints: F.kind=poly; G.kind=poly; F.degree=2; G.degree=1; G.coef=1; require deriv(F, 1)(t)*deriv(G, 1)(x) > 0.05

id: liouville-wrong-sign
vars: t, x
funcs: F/1, G/1
pde: w_tx + exp(w)
solution: ln(2*deriv(F, 1)(t)*deriv(G, 1)(x)/(F(t) + G(x))^2)
hints: F.kind=poly; G.kind=poly; F.degree=2; G.degree=1; G.coef=1; require deriv(F, 1)(t)*deriv(G, 1)(x) > 0.05
)";

}  // namespace

int main() {
  using namespace pdegensol;
  const Catalog catalog = Catalog::parse(kFamilies);
  for (const auto& fam : catalog.families()) {
    auto report = verify_family(fam);
    std::cout << format_report(report, &fam);

    // Values of w on a few points of the first sampled member.
    const Scenario s = sample_scenario(fam, 1);
    Evaluator ev = make_evaluator(fam, s);
    for (double t : {0.3, 0.7}) {
      ev.set_point({{"t", t}, {"x", 0.5}});
      std::cout << "    w(" << t << ", 0.5) = " << ev.eval_scalar(fam.solution) << "\n";
    }
  }
}
