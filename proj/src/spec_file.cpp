#include "martkit/spec_file.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace martkit {

namespace {

std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

double parse_number(const std::string& token, int line_no) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size()) {
        throw ParseError("line " + std::to_string(line_no) + ": expected a number, got '" +
                         token + "'");
    }
    return value;
}

long parse_integer(const std::string& token, int line_no) {
    const double value = parse_number(token, line_no);
    const long rounded = static_cast<long>(value);
    if (static_cast<double>(rounded) != value) {
        throw ParseError("line " + std::to_string(line_no) + ": expected an integer, got '" +
                         token + "'");
    }
    return rounded;
}

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

ChainSpec parse_chain_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open spec file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_chain_spec_text(text.str(), path);
}

ChainSpec parse_chain_spec_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    std::optional<int> n_states;
    std::vector<std::vector<double>> kernel_rows;
    std::vector<double> observable_values;
    std::vector<std::string> labels;
    RunOptions options;
    bool in_kernel = false;
    bool in_observable = false;

    auto numbers_needed = [&](const char* what) -> int {
        if (!n_states) {
            throw ParseError("line " + std::to_string(line_no) + ": '" + what +
                             "' before 'states'");
        }
        return *n_states;
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(strip_comment(line));
        if (tokens.empty()) continue;
        const std::string& head = tokens.front();

        if (in_kernel) {
            const int n = numbers_needed("kernel");
            if (static_cast<int>(tokens.size()) != n) {
                throw ParseError("line " + std::to_string(line_no) + ": kernel row needs " +
                                 std::to_string(n) + " entries, got " +
                                 std::to_string(tokens.size()));
            }
            std::vector<double> row;
            for (const auto& token : tokens) row.push_back(parse_number(token, line_no));
            kernel_rows.push_back(std::move(row));
            if (static_cast<int>(kernel_rows.size()) == n) in_kernel = false;
            continue;
        }
        if (in_observable) {
            for (const auto& token : tokens) {
                observable_values.push_back(parse_number(token, line_no));
            }
            if (static_cast<int>(observable_values.size()) >= numbers_needed("observable")) {
                in_observable = false;
            }
            continue;
        }

        if (head == "states") {
            if (tokens.size() != 2) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": 'states' takes one integer");
            }
            const long n = parse_integer(tokens[1], line_no);
            if (n < 1 || n > 4096) {
                throw ParseError("line " + std::to_string(line_no) + ": state count " +
                                 std::to_string(n) + " out of range");
            }
            n_states = static_cast<int>(n);
        } else if (head == "labels") {
            labels.assign(tokens.begin() + 1, tokens.end());
        } else if (head == "kernel") {
            numbers_needed("kernel");
            in_kernel = true;
        } else if (head == "observable") {
            numbers_needed("observable");
            in_observable = true;
        } else if (head == "m-grid" || head == "n-grid") {
            std::vector<int> grid;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                grid.push_back(static_cast<int>(parse_integer(tokens[i], line_no)));
            }
            if (grid.empty()) {
                throw ParseError("line " + std::to_string(line_no) + ": empty " + head);
            }
            (head == "m-grid" ? options.m_grid : options.n_grid) = std::move(grid);
        } else if (head == "replicas") {
            if (tokens.size() != 2) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": 'replicas' takes one integer");
            }
            options.replicas = static_cast<int>(parse_integer(tokens[1], line_no));
        } else if (head == "seed") {
            if (tokens.size() != 2) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": 'seed' takes one integer");
            }
            options.seed = static_cast<std::uint64_t>(parse_integer(tokens[1], line_no));
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown directive '" +
                             head + "'");
        }
    }

    if (!n_states) throw ParseError(origin + ": missing 'states'");
    const int n = *n_states;
    if (static_cast<int>(kernel_rows.size()) != n) {
        throw ParseError(origin + ": kernel has " + std::to_string(kernel_rows.size()) +
                         " rows, expected " + std::to_string(n));
    }
    if (static_cast<int>(observable_values.size()) != n) {
        throw ParseError(origin + ": observable has " +
                         std::to_string(observable_values.size()) + " values, expected " +
                         std::to_string(n));
    }
    if (!labels.empty() && static_cast<int>(labels.size()) != n) {
        throw ParseError(origin + ": " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " states");
    }

    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) kernel(i, j) = kernel_rows[i][j];
    }
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw(i) = observable_values[i];

    FiniteMarkovChain chain = [&] {
        try {
            return build_chain(kernel);
        } catch (const Error& err) {
            throw ValidationError(origin + ": " + err.what());
        }
    }();

    std::vector<std::string> warnings;
    const double mean = chain.pi().dot(raw);
    if (std::abs(mean) > tol::kInput) {
        warnings.push_back("observable recentered: pi.f was " + format_number(mean));
    }
    Observable observable = Observable::centered(chain, raw);
    ChainSpec spec{std::move(chain), std::move(observable), std::move(labels),
                   options, std::move(warnings), 0};
    spec.digest = fnv1a64(format_chain_spec(spec));
    return spec;
}

std::string format_chain_spec(const ChainSpec& spec) {
    std::ostringstream out;
    const int n = spec.chain.n_states();
    out << "states " << n << "\n";
    if (!spec.labels.empty()) {
        out << "labels";
        for (const auto& label : spec.labels) out << ' ' << label;
        out << "\n";
    }
    out << "kernel\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out << (j ? " " : "") << format_number(spec.chain.kernel()(i, j));
        }
        out << "\n";
    }
    out << "observable\n";
    for (int i = 0; i < n; ++i) {
        out << (i ? " " : "") << format_number(spec.observable.values()(i));
    }
    out << "\n";
    out << "m-grid";
    for (const int m : spec.options.m_grid) out << ' ' << m;
    out << "\nn-grid";
    for (const int v : spec.options.n_grid) out << ' ' << v;
    out << "\nreplicas " << spec.options.replicas;
    out << "\nseed " << spec.options.seed << "\n";
    return out.str();
}

}  // namespace martkit
