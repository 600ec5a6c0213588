#pragma once

#include <json.hpp>
#include <string>

#include "dyadlab/carleson.hpp"
#include "dyadlab/haar.hpp"
#include "dyadlab/matrix_weight.hpp"
#include "dyadlab/shift.hpp"
#include "dyadlab/sparse.hpp"
#include "dyadlab/tree.hpp"

namespace dyadlab {

// measure files: {"n":., "L":., "leaf_masses":[..]} with lexicographic leaf order
nlohmann::json tree_to_json(const MeasuredTree& tree);
MeasuredTree tree_from_json(const nlohmann::json& j);

// "--measure <file|preset:spec>"
MeasuredTree load_measure(const std::string& arg, int n, int L, std::uint64_t seed);

// haar system export: per-cube {cube:{level,index}, alphas:[per child], m}
nlohmann::json haar_to_json(const HaarSystem& hs);

// shift files: list of {Q:{level,index}, J:{..}, K:{..}, c}
nlohmann::json shift_to_json(const HaarShift& shift);
HaarShift shift_from_json(const HaarSystem& hs, const nlohmann::json& j);

// weight files: {"d":., "leaves":[ [row-major d*d], ... ]}
nlohmann::json weight_to_json(const MatrixWeight& w);
MatrixWeight weight_from_json(const MeasuredTree& tree, const nlohmann::json& j);

nlohmann::json balanced_report_to_json(const BalancedReport& rep);
nlohmann::json sparseness_to_json(const SparsenessReport& rep);
nlohmann::json certificate_to_json(const DominationCertificate& cert,
                                   const SparsenessReport& sparseness);
nlohmann::json embedding_report_to_json(const EmbeddingReport& rep);

// minimal structural validation driven by a shipped schema file: every key in
// the schema's "required" object must be present with the named JSON type
bool validate_against_schema(const nlohmann::json& doc, const nlohmann::json& schema,
                             std::string* error = nullptr);

// pinned-constant files: "name = value" lines, '#' comments
std::vector<std::pair<std::string, double>> load_pins(const std::string& path);
double pin_value(const std::vector<std::pair<std::string, double>>& pins, const std::string& name);

}  // namespace dyadlab
