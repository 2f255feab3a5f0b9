#pragma once

#include <set>
#include <string>
#include <vector>

#include "routerdc/params.hpp"

namespace routerdc {

struct RouteResult {
    std::string chosen_llm;
    std::vector<double> similarities;   // one per LLM, checkpoint order
    std::vector<double> probabilities;  // zero at excluded entries, sum 1 elsewhere
    std::vector<std::string> excluded;  // the exclusions honored
};

// Argmax of the query-LLM cosine similarities over the non-excluded pool,
// ties by ascending index. Rejects empty text, unknown exclusion names, and an
// exclusion set that covers the whole pool.
RouteResult route(const std::string& text, const RouterParameters& params,
                  const std::set<std::string>& exclude = {});

}  // namespace routerdc
