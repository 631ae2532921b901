#include "dpfl/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dpfl/metrics.hpp"

namespace dpfl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

class KeyValueFile {
public:
    KeyValueFile(const std::string& text, std::string name) : name_(std::move(name)) {
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(line_no, "empty key");
            if (value.empty()) fail(line_no, "empty value for key '" + key + "'");
            if (entries_.count(key) != 0)
                fail(line_no, "duplicate key '" + key + "' (first at line " +
                                  std::to_string(entries_[key].line) + ")");
            entries_[key] = {value, line_no, false};
        }
    }

    [[noreturn]] void fail(int line, const std::string& message) const {
        throw ConfigError(name_ + ":" + std::to_string(line) + ": " + message);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const Entry& require(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(name_ + ": missing config key '" + key + "'");
        it->second.used = true;
        return it->second;
    }

    const Entry* optional(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    long long get_int(const std::string& key) { return to_int(require(key)); }
    long long get_int_or(const std::string& key, long long fallback) {
        const Entry* e = optional(key);
        return e == nullptr ? fallback : to_int(*e);
    }
    double get_real_or(const std::string& key, double fallback) {
        const Entry* e = optional(key);
        return e == nullptr ? fallback : to_real(*e);
    }
    std::uint64_t get_u64(const std::string& key) { return to_u64(require(key)); }
    bool get_bool_or(const std::string& key, bool fallback) {
        const Entry* e = optional(key);
        if (e == nullptr) return fallback;
        if (e->value == "true" || e->value == "1") return true;
        if (e->value == "false" || e->value == "0") return false;
        fail(e->line, "expected true/false for '" + key + "'");
    }

    void check_all_used() const {
        for (const auto& [key, entry] : entries_) {
            if (!entry.used)
                fail(entry.line, "unknown config key '" + key + "'");
        }
    }

    long long to_int(const Entry& e) const {
        try {
            std::size_t pos = 0;
            long long v = std::stoll(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            fail(e.line, "expected an integer, got '" + e.value + "'");
        }
    }
    std::uint64_t to_u64(const Entry& e) const {
        try {
            std::size_t pos = 0;
            std::uint64_t v = std::stoull(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            fail(e.line, "expected an unsigned integer, got '" + e.value + "'");
        }
    }
    double to_real(const Entry& e) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            fail(e.line, "expected a real number, got '" + e.value + "'");
        }
    }

private:
    std::string name_;
    std::map<std::string, Entry> entries_;
};

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& name) {
    KeyValueFile file(text, name);
    RunConfig cfg;

    cfg.seed = file.get_u64("seed");

    {
        const Entry& mode = file.require("mode");
        if (mode.value == "dpfl") cfg.mode = RunMode::dpfl;
        else if (mode.value == "local_only") cfg.mode = RunMode::local_only;
        else if (mode.value == "fedavg") cfg.mode = RunMode::fedavg;
        else if (mode.value == "random_graph") cfg.mode = RunMode::random_graph;
        else file.fail(mode.line, "mode must be dpfl, local_only, fedavg or random_graph");
    }

    cfg.num_clients = static_cast<int>(file.get_int("num_clients"));
    cfg.rounds = static_cast<int>(file.get_int("rounds"));

    if (const Entry* budget = file.optional("budget")) {
        if (budget->value == "unbounded" || budget->value == "inf") {
            cfg.budget = kUnbounded;
        } else {
            cfg.budget = static_cast<int>(file.to_int(*budget));
            if (cfg.budget < 0) file.fail(budget->line, "budget must be >= 0 or 'unbounded'");
        }
    }

    cfg.tau_init = static_cast<int>(file.get_int_or("tau_init", 5));
    cfg.tau_train = static_cast<int>(file.get_int_or("tau_train", 2));
    cfg.refresh_period = static_cast<int>(file.get_int_or("refresh_period", 1));
    cfg.threads = static_cast<int>(file.get_int_or("threads", 1));

    if (const Entry* coin = file.optional("coin_mode")) {
        if (coin->value == "lockstep") cfg.coin_mode = CoinMode::lockstep;
        else if (coin->value == "mixed_only") cfg.coin_mode = CoinMode::mixed_only;
        else file.fail(coin->line, "coin_mode must be lockstep or mixed_only");
    }

    cfg.sgd.learning_rate = file.get_real_or("sgd.learning_rate", 0.05);
    cfg.sgd.weight_decay = file.get_real_or("sgd.weight_decay", 1e-3);
    cfg.sgd.momentum = file.get_real_or("sgd.momentum", 0.9);
    cfg.sgd.batch_size = static_cast<int>(file.get_int_or("sgd.batch_size", 16));

    cfg.dataset.num_classes = static_cast<int>(file.get_int_or("dataset.num_classes", 5));
    cfg.dataset.num_features = static_cast<int>(file.get_int_or("dataset.num_features", 16));
    cfg.dataset.samples_per_class =
        static_cast<int>(file.get_int_or("dataset.samples_per_class", 2000));
    cfg.dataset.class_center_scale = file.get_real_or("dataset.class_center_scale", 4.0);
    cfg.dataset.noise_sigma = file.get_real_or("dataset.noise_sigma", 1.5);

    if (const Entry* scheme = file.optional("partition.scheme")) {
        if (scheme->value == "dirichlet") cfg.partition.scheme = PartitionScheme::dirichlet;
        else if (scheme->value == "pathological") cfg.partition.scheme = PartitionScheme::pathological;
        else if (scheme->value == "natural_file") cfg.partition.scheme = PartitionScheme::natural_file;
        else file.fail(scheme->line, "partition.scheme must be dirichlet, pathological or natural_file");
    }
    cfg.partition.alpha = file.get_real_or("partition.alpha", 0.5);
    cfg.partition.classes_per_client =
        static_cast<int>(file.get_int_or("partition.classes_per_client", 3));
    if (const Entry* path = file.optional("partition.path")) cfg.partition.natural_path = path->value;
    cfg.partition.val_fraction = file.get_real_or("partition.val_fraction", 0.2);
    cfg.partition.test_fraction = file.get_real_or("partition.test_fraction", 0.2);
    cfg.partition.num_clients = cfg.num_clients;

    if (file.has("malicious.fraction")) {
        MaliciousSpec mal;
        mal.fraction = file.get_real_or("malicious.fraction", 0.0);
        mal.runs_ggc = file.get_bool_or("malicious.runs_ggc", true);
        if (const Entry* perm = file.optional("malicious.permutation_seed"))
            mal.permutation_seed = file.to_u64(*perm);
        else
            mal.permutation_seed = derive_seed(cfg.seed, "flip");
        cfg.malicious = mal;
    } else {
        // Tolerate the dependent keys only alongside a fraction.
        if (file.has("malicious.runs_ggc") || file.has("malicious.permutation_seed"))
            throw ConfigError(name + ": missing config key 'malicious.fraction'");
    }

    file.check_all_used();
    cfg.validate();
    return cfg;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config_text(buffer.str(), path);
}

std::string render_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "seed = " << cfg.seed << "\n";
    switch (cfg.mode) {
        case RunMode::dpfl: out << "mode = dpfl\n"; break;
        case RunMode::local_only: out << "mode = local_only\n"; break;
        case RunMode::fedavg: out << "mode = fedavg\n"; break;
        case RunMode::random_graph: out << "mode = random_graph\n"; break;
    }
    out << "num_clients = " << cfg.num_clients << "\n";
    out << "rounds = " << cfg.rounds << "\n";
    if (cfg.budget == kUnbounded) out << "budget = unbounded\n";
    else out << "budget = " << cfg.budget << "\n";
    out << "tau_init = " << cfg.tau_init << "\n";
    out << "tau_train = " << cfg.tau_train << "\n";
    out << "refresh_period = " << cfg.refresh_period << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "coin_mode = " << (cfg.coin_mode == CoinMode::lockstep ? "lockstep" : "mixed_only") << "\n";
    out << "sgd.learning_rate = " << format_real(cfg.sgd.learning_rate) << "\n";
    out << "sgd.weight_decay = " << format_real(cfg.sgd.weight_decay) << "\n";
    out << "sgd.momentum = " << format_real(cfg.sgd.momentum) << "\n";
    out << "sgd.batch_size = " << cfg.sgd.batch_size << "\n";
    out << "dataset.num_classes = " << cfg.dataset.num_classes << "\n";
    out << "dataset.num_features = " << cfg.dataset.num_features << "\n";
    out << "dataset.samples_per_class = " << cfg.dataset.samples_per_class << "\n";
    out << "dataset.class_center_scale = " << format_real(cfg.dataset.class_center_scale) << "\n";
    out << "dataset.noise_sigma = " << format_real(cfg.dataset.noise_sigma) << "\n";
    switch (cfg.partition.scheme) {
        case PartitionScheme::dirichlet:
            out << "partition.scheme = dirichlet\n";
            out << "partition.alpha = " << format_real(cfg.partition.alpha) << "\n";
            break;
        case PartitionScheme::pathological:
            out << "partition.scheme = pathological\n";
            out << "partition.classes_per_client = " << cfg.partition.classes_per_client << "\n";
            break;
        case PartitionScheme::natural_file:
            out << "partition.scheme = natural_file\n";
            out << "partition.path = " << cfg.partition.natural_path << "\n";
            break;
    }
    out << "partition.val_fraction = " << format_real(cfg.partition.val_fraction) << "\n";
    out << "partition.test_fraction = " << format_real(cfg.partition.test_fraction) << "\n";
    if (cfg.malicious.has_value()) {
        out << "malicious.fraction = " << format_real(cfg.malicious->fraction) << "\n";
        out << "malicious.runs_ggc = " << (cfg.malicious->runs_ggc ? "true" : "false") << "\n";
        out << "malicious.permutation_seed = " << cfg.malicious->permutation_seed << "\n";
    }
    return out.str();
}

}  // namespace dpfl
