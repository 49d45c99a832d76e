#pragma once

#include <functional>
#include <string>
#include <vector>

#include "autodiff.hpp"

// Finite-difference certification of the reverse-mode gradients. Checks run
// in f64 with inputs placed away from the kinks of ReLU, channel-max, and the
// bilinear lattice, where central differences are valid.
namespace srnet::gradcheck {

// Builds a taped scalar loss from the leaf under test.
using LossFn =
    std::function<ad::Var<double>(ad::Tape<double>&, ad::Var<double>)>;

struct FdResult {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h against the tape
// gradient; reports max over coordinates of |analytic - numeric| /
// max(1, |numeric|). max_coords > 0 checks a deterministic subsample.
FdResult fd_check(const LossFn& f, const Tensor<double>& x, double h = 1e-4,
                  int max_coords = -1);

struct CheckRow {
  std::string name;
  double max_rel_err = 0.0;
  double threshold = 1e-4;
  bool pass = false;
};

// Named per-op checks; `filter` keeps rows whose name contains it.
std::vector<CheckRow> run_checks(const std::string& filter = "");

std::string format_table(const std::vector<CheckRow>& rows);

}  // namespace srnet::gradcheck
