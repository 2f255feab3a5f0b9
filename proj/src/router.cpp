#include "routerdc/router.hpp"

#include <algorithm>

#include "routerdc/encoder.hpp"
#include "routerdc/types.hpp"

namespace routerdc {

RouteResult route(const std::string& text, const RouterParameters& params,
                  const std::set<std::string>& exclude) {
    if (text.empty()) throw ValidationError("cannot route an empty query");

    std::vector<bool> masked(params.num_llms(), false);
    for (const std::string& name : exclude) masked[params.llm_index(name)] = true;

    std::size_t remaining = 0;
    for (bool m : masked)
        if (!m) ++remaining;
    if (remaining == 0) throw ValidationError("every LLM is excluded; nothing to route to");

    std::vector<double> e = encode(text, params);
    bool all_zero = std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; });
    if (all_zero)
        throw ValidationError("query embedding is the zero vector; reject empty queries");

    RouteResult result;
    result.similarities = similarities(e, params);
    result.excluded.assign(exclude.begin(), exclude.end());

    std::size_t best = params.num_llms();
    std::vector<double> kept_sims;
    std::vector<std::size_t> kept_idx;
    for (std::size_t t = 0; t < params.num_llms(); ++t) {
        if (masked[t]) continue;
        kept_idx.push_back(t);
        kept_sims.push_back(result.similarities[t]);
        if (best == params.num_llms() || result.similarities[t] > result.similarities[best]) best = t;
    }
    result.chosen_llm = params.llm_names[best];

    std::vector<double> probs = softmax(kept_sims);
    result.probabilities.assign(params.num_llms(), 0.0);
    for (std::size_t i = 0; i < kept_idx.size(); ++i) result.probabilities[kept_idx[i]] = probs[i];
    return result;
}

}  // namespace routerdc
