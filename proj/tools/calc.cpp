// calc: closed-form cost figures for log-structured and copy-on-write storage.
#include "sda/analytic.hpp"
#include "sda/core.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <string>

namespace {

// Arguments are read as exact decimals or n/d fractions so that results such
// as 2 / (1 - 0.8) come out exact.
void print(const sda::Fraction& f) {
  if (f.den == 1) {
    std::cout << f.num << "\n";
  } else {
    std::cout << std::setprecision(12) << f.to_double() << " (" << f.num << "/" << f.den << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic cost calculator"};
  app.require_subcommand(1);

  std::string mu;
  auto* rho_cmd = app.add_subcommand("lfs-rho", "write amplification of a cleaning log at utilization mu");
  rho_cmd->add_option("--mu", mu, "mean utilization of cleaned segments, in [0, 1)")->required();

  std::string b;
  std::string rho;
  auto* slow_cmd = app.add_subcommand("cow-slowdown", "CoW update cost factor over a log");
  slow_cmd->add_option("--b", b, "entries per block")->required();
  slow_cmd->add_option("--rho", rho, "log write amplification")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*rho_cmd) print(sda::lfs_rho(sda::Fraction::parse(mu)));
    if (*slow_cmd) print(sda::cow_slowdown(sda::Fraction::parse(b), sda::Fraction::parse(rho)));
  } catch (const sda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
