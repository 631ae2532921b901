#include "dpfl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dpfl {

std::pair<double, double> mean_and_variance(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_and_variance on empty input");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return {mean, var};
}

double sparsity(const std::vector<std::vector<int>>& selected, int n) {
    if (n <= 1) return 1.0;
    long edges = 0;
    for (const auto& row : selected) edges += static_cast<long>(row.size());
    return 1.0 - static_cast<double>(edges) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double symmetry_pct(const std::vector<std::vector<int>>& selected, int n) {
    std::vector<std::set<int>> rows(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        rows[static_cast<std::size_t>(k)] =
            std::set<int>(selected[static_cast<std::size_t>(k)].begin(),
                          selected[static_cast<std::size_t>(k)].end());
    long pairs = 0;
    long mutual = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool ij = rows[static_cast<std::size_t>(i)].count(j) != 0;
            const bool ji = rows[static_cast<std::size_t>(j)].count(i) != 0;
            if (ij || ji) {
                ++pairs;
                if (ij && ji) ++mutual;
            }
        }
    }
    if (pairs == 0) return 100.0;
    return 100.0 * static_cast<double>(mutual) / static_cast<double>(pairs);
}

double cross_group_fraction(const std::vector<std::vector<int>>& selected,
                            const std::vector<int>& benign, const std::vector<int>& malicious,
                            std::vector<double>* per_client) {
    std::set<int> bad(malicious.begin(), malicious.end());
    for (int b : benign)
        if (bad.count(b) != 0) throw std::invalid_argument("benign and malicious sets overlap");
    if (per_client != nullptr) per_client->clear();
    long edges = 0;
    long cross = 0;
    for (int k : benign) {
        const auto& row = selected[static_cast<std::size_t>(k)];
        long own_cross = 0;
        for (int j : row)
            if (bad.count(j) != 0) ++own_cross;
        edges += static_cast<long>(row.size());
        cross += own_cross;
        if (per_client != nullptr)
            per_client->push_back(row.empty() ? 0.0
                                              : static_cast<double>(own_cross) /
                                                    static_cast<double>(row.size()));
    }
    if (edges == 0) return 0.0;
    return static_cast<double>(cross) / static_cast<double>(edges);
}

std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::string csv_header() {
    return "round,mean_test_acc,acc_variance,sparsity,symmetry_pct,cross_group_frac,"
           "models_sent,models_received,oracle_calls,peak_foreign_models";
}

std::string to_csv_row(const RoundRecord& r) {
    std::string row = std::to_string(r.round);
    row += ',';
    row += format_real(r.mean_test_accuracy);
    row += ',';
    row += format_real(r.accuracy_variance);
    row += ',';
    row += format_real(r.graph_sparsity);
    row += ',';
    row += format_real(r.symmetry_pct);
    row += ',';
    if (r.benign_to_malicious_frac.has_value()) row += format_real(*r.benign_to_malicious_frac);
    row += ',';
    row += std::to_string(r.comm.models_sent);
    row += ',';
    row += std::to_string(r.comm.models_received);
    row += ',';
    row += std::to_string(r.comm.oracle_calls);
    row += ',';
    row += std::to_string(r.comm.peak_foreign_models);
    return row;
}

std::string to_json(const RoundRecord& r) {
    nlohmann::json j = {
        {"round", r.round},
        {"mean_test_acc", r.mean_test_accuracy},
        {"acc_variance", r.accuracy_variance},
        {"sparsity", r.graph_sparsity},
        {"symmetry_pct", r.symmetry_pct},
        {"cross_group_frac",
         r.benign_to_malicious_frac.has_value() ? nlohmann::json(*r.benign_to_malicious_frac)
                                                : nlohmann::json(nullptr)},
        {"models_sent", r.comm.models_sent},
        {"models_received", r.comm.models_received},
        {"oracle_calls", r.comm.oracle_calls},
        {"peak_foreign_models", r.comm.peak_foreign_models},
    };
    return j.dump();
}

std::string graph_to_json(const CollabGraph& graph, int round) {
    nlohmann::json j = {
        {"round", round},
        {"budget", graph.budget < 0 ? nlohmann::json(nullptr) : nlohmann::json(graph.budget)},
        {"omega", graph.omega},
        {"selected", graph.selected},
    };
    return j.dump();
}

CollabGraph graph_from_json(const std::string& text, int* round) {
    nlohmann::json j = nlohmann::json::parse(text);
    CollabGraph graph;
    graph.budget = j.at("budget").is_null() ? kUnbounded : j.at("budget").get<int>();
    graph.omega = j.at("omega").get<std::vector<std::vector<int>>>();
    graph.selected = j.at("selected").get<std::vector<std::vector<int>>>();
    graph.n = static_cast<int>(graph.omega.size());
    if (round != nullptr) *round = j.at("round").get<int>();
    return graph;
}

std::string graph_to_dot(const CollabGraph& graph) {
    std::string out = "digraph collaboration {\n";
    for (int k = 0; k < graph.n; ++k) {
        out += "  " + std::to_string(k) + ";\n";
    }
    for (int k = 0; k < graph.n; ++k) {
        std::set<int> chosen(graph.selected[static_cast<std::size_t>(k)].begin(),
                             graph.selected[static_cast<std::size_t>(k)].end());
        for (int j : graph.selected[static_cast<std::size_t>(k)]) {
            if (j == k) continue;
            out += "  " + std::to_string(j) + " -> " + std::to_string(k) + " [color=red];\n";
        }
        for (int j : graph.omega[static_cast<std::size_t>(k)]) {
            if (j == k || chosen.count(j) != 0) continue;
            out += "  " + std::to_string(j) + " -> " + std::to_string(k) + " [color=blue];\n";
        }
    }
    out += "}\n";
    return out;
}

}  // namespace dpfl
