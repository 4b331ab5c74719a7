#include "hotrod/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hotrod/types.hpp"

namespace hotrod {

namespace {

void dump_value(const nlohmann::json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            std::size_t i = 0;
            for (auto it = j.cbegin(); it != j.cend(); ++it, ++i) {
                out += pad;
                out += nlohmann::json(it.key()).dump();
                out += ": ";
                dump_value(it.value(), out, indent, depth + 1);
                if (i + 1 < j.size()) out += ',';
                out += '\n';
            }
            out += close_pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out += pad;
                dump_value(j[i], out, indent, depth + 1);
                if (i + 1 < j.size()) out += ',';
                out += '\n';
            }
            out += close_pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
            out += buf;
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
    std::string out;
    dump_value(j, out, indent, 0);
    out += '\n';
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string json_hash(const nlohmann::json& j) { return fnv1a_hex(dump_json(j, 0)); }

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_input("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

void write_artifact(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail_input("cannot write " + tmp.string());
        out << contents;
        if (!out) fail_input("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_artifact(const std::filesystem::path& path, const nlohmann::json& j) {
    write_artifact(path, dump_json(j));
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail_input(path.string() + ": invalid JSON: " + e.what());
    }
    return j;
}

}  // namespace hotrod
