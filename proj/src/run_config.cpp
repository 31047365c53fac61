#include "dbrn/run_config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dbrn {

namespace {

const char* const kCommands[] = {"gen-data", "extract", "eval", "ablate", "fit-tau", "heatmap"};

bool known_command(const std::string& cmd) {
    for (const char* c : kCommands) {
        if (cmd == c) return true;
    }
    return false;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_ll(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (errno != 0 || end != value.c_str() + value.size() || value.empty()) {
        throw ParameterError("config: bad integer for '" + key + "': " + value);
    }
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    return static_cast<int>(parse_ll(key, value));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end != value.c_str() + value.size() || value.empty() ||
        value.front() == '-') {
        throw ParameterError("config: bad unsigned integer for '" + key + "': " + value);
    }
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end != value.c_str() + value.size() || value.empty()) {
        throw ParameterError("config: bad number for '" + key + "': " + value);
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw ParameterError("config: bad boolean for '" + key + "': " + value);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(parse_int(key, trim(item)));
    if (out.empty()) throw ParameterError("config: empty list for '" + key + "'");
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(values[i]);
    }
    return s;
}

} // namespace

HeadConfig RunConfig::head() const {
    HeadConfig h;
    h.k = k;
    h.tau = tau;
    h.omega = omega;
    h.use_weight = use_weight;
    h.use_pow = use_pow;
    h.use_protoaug = use_protoaug;
    return h;
}

ScaleSet RunConfig::scale_set() const { return ScaleSet{scales}; }

ExtractorConfig RunConfig::extractor() const {
    ExtractorConfig e;
    e.seed = ext_seed;
    e.out_dim = ext_dim;
    e.strides = ext_strides;
    e.num_layers = static_cast<int>(ext_strides.size());
    return e;
}

std::string RunConfig::to_kv() const {
    std::ostringstream out;
    out << "command = " << command << "\n";
    out << "data = " << data << "\n";
    out << "labels = " << labels << "\n";
    out << "out = " << this->out << "\n";
    out << "n_way = " << n_way << "\n";
    out << "k_shot = " << k_shot << "\n";
    out << "q_queries = " << q_queries << "\n";
    out << "num_episodes = " << num_episodes << "\n";
    out << "seed = " << seed << "\n";
    out << "k = " << k << "\n";
    out << "tau = " << format_double(tau) << "\n";
    out << "omega = " << format_double(omega) << "\n";
    out << "use_weight = " << (use_weight ? 1 : 0) << "\n";
    out << "use_pow = " << (use_pow ? 1 : 0) << "\n";
    out << "use_protoaug = " << (use_protoaug ? 1 : 0) << "\n";
    out << "query_multiscale = " << (query_multiscale ? 1 : 0) << "\n";
    out << "scales = " << join_ints(scales) << "\n";
    out << "ext_seed = " << ext_seed << "\n";
    out << "ext_dim = " << ext_dim << "\n";
    out << "ext_strides = " << join_ints(ext_strides) << "\n";
    out << "classes = " << classes << "\n";
    out << "samples = " << samples << "\n";
    out << "resolution = " << resolution << "\n";
    out << "resize = " << resize << "\n";
    out << "lr = " << format_double(lr) << "\n";
    out << "steps = " << steps << "\n";
    return out.str();
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(line_no) +
                                 ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "command") {
            if (!known_command(value)) throw ParameterError("config: unknown command: " + value);
            c.command = value;
        } else if (key == "data") {
            c.data = value;
        } else if (key == "labels") {
            c.labels = value;
        } else if (key == "out") {
            c.out = value;
        } else if (key == "n_way") {
            c.n_way = parse_int(key, value);
        } else if (key == "k_shot") {
            c.k_shot = parse_int(key, value);
        } else if (key == "q_queries") {
            c.q_queries = parse_int(key, value);
        } else if (key == "num_episodes") {
            c.num_episodes = parse_int(key, value);
        } else if (key == "seed") {
            c.seed = parse_u64(key, value);
        } else if (key == "k") {
            c.k = parse_int(key, value);
        } else if (key == "tau") {
            c.tau = parse_double(key, value);
        } else if (key == "omega") {
            c.omega = parse_double(key, value);
        } else if (key == "use_weight") {
            c.use_weight = parse_bool(key, value);
        } else if (key == "use_pow") {
            c.use_pow = parse_bool(key, value);
        } else if (key == "use_protoaug") {
            c.use_protoaug = parse_bool(key, value);
        } else if (key == "query_multiscale") {
            c.query_multiscale = parse_bool(key, value);
        } else if (key == "scales") {
            c.scales = parse_int_list(key, value);
        } else if (key == "ext_seed") {
            c.ext_seed = parse_u64(key, value);
        } else if (key == "ext_dim") {
            c.ext_dim = parse_int(key, value);
        } else if (key == "ext_strides") {
            c.ext_strides = parse_int_list(key, value);
        } else if (key == "classes") {
            c.classes = parse_int(key, value);
        } else if (key == "samples") {
            c.samples = parse_int(key, value);
        } else if (key == "resolution") {
            c.resolution = parse_int(key, value);
        } else if (key == "resize") {
            c.resize = parse_int(key, value);
        } else if (key == "lr") {
            c.lr = parse_double(key, value);
        } else if (key == "steps") {
            c.steps = parse_int(key, value);
        } else {
            throw ParameterError("config: unknown key '" + key + "'");
        }
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

} // namespace dbrn
