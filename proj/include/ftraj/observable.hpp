#pragma once

#include <string>
#include <vector>

#include "ftraj/errors.hpp"

namespace ftraj {

// Observable requests are strings in configs ("entropy:half", "n:1", ...);
// engines receive them pre-parsed. `index` is the cut length for entropy
// (sites in subsystem A, counted from the left) and the 1-based site for
// densities; unused otherwise.
struct ObservableSpec {
    enum class Kind {
        EntropyCut,   // von Neumann entropy of the first `index` sites
        Density,      // <n_j> at 1-based site `index`
        LnIpr,        // log inverse participation ratio
        Parity,       // fermion parity expectation
        Negativity,   // fermionic logarithmic negativity (ladder)
    };
    Kind kind;
    int index = 0;
    std::string name;  // echo of the config string, used in output columns
};

ObservableSpec parse_observable(const std::string& name, int L);

std::vector<ObservableSpec> parse_observables(
    const std::vector<std::string>& names, int L);

}  // namespace ftraj
