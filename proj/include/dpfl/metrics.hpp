// Per-round metrics and serialization: accuracy spread, graph sparsity and
// symmetry, cross-group collaboration fractions, CSV/JSON/DOT export.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpfl/graph.hpp"

namespace dpfl {

struct CommLedger {
    long models_sent = 0;
    long models_received = 0;
    long oracle_calls = 0;
    int peak_foreign_models = 0;
};

struct RoundRecord {
    int round = 0;
    double mean_test_accuracy = 0.0;
    double accuracy_variance = 0.0;
    double graph_sparsity = 1.0;
    double symmetry_pct = 100.0;
    std::optional<double> benign_to_malicious_frac;
    CommLedger comm;
};

// Arithmetic mean and population variance (divide by N).
std::pair<double, double> mean_and_variance(const std::vector<double>& values);

// Fraction of absent off-diagonal directed edges in the selection.
double sparsity(const std::vector<std::vector<int>>& selected, int n);

// Over unordered pairs with at least one directed edge, the percentage with
// both directions present. A graph with no edges counts as fully symmetric.
double symmetry_pct(const std::vector<std::vector<int>>& selected, int n);

// Fraction of benign clients' selected edges that point at malicious
// clients; per_client (optional) receives each benign client's own fraction
// (clients with no edges report 0).
double cross_group_fraction(const std::vector<std::vector<int>>& selected,
                            const std::vector<int>& benign, const std::vector<int>& malicious,
                            std::vector<double>* per_client = nullptr);

// Fixed CSV schema; reals printed with 10 significant digits.
std::string csv_header();
std::string to_csv_row(const RoundRecord& record);
std::string to_json(const RoundRecord& record);

std::string graph_to_json(const CollabGraph& graph, int round);
CollabGraph graph_from_json(const std::string& text, int* round = nullptr);

// DOT export: selected edges in red, omega-but-unselected in blue.
std::string graph_to_dot(const CollabGraph& graph);

std::string format_real(double value);

}  // namespace dpfl
