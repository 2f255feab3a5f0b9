#pragma once

#include <map>
#include <string>
#include <vector>

#include "routerdc/types.hpp"

namespace routerdc {

// All readers/writers speak line-delimited JSON and report the first offending
// line number on malformed input.

std::vector<Query> read_queries(const std::string& path);
void write_queries(const std::vector<Query>& queries, const std::string& path);

std::vector<GenerationRecord> read_generations(const std::string& path,
                                               const std::vector<Query>& queries);
void write_generations(const std::vector<GenerationRecord>& records, const std::string& path);

// Scores file: a header line carrying llm_names, then one row per query.
void write_score_matrix(const ScoreMatrix& matrix, const std::string& path);
ScoreMatrix read_score_matrix(const std::string& path);

// query_id -> cluster_id map emitted by the cluster stage.
void write_clusters(const std::vector<Query>& queries, const std::string& path);
std::map<std::string, int> read_clusters(const std::string& path);
// Copies cluster ids onto the queries; every query must be covered.
void apply_clusters(std::vector<Query>& queries, const std::map<std::string, int>& clusters);

std::vector<LLMDescriptor> read_pool(const std::string& path);
void write_pool(const std::vector<LLMDescriptor>& pool, const std::string& path);

}  // namespace routerdc
