#include "promptstream/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "promptstream/errors.hpp"

namespace promptstream::checkpoint {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save(const ParameterSet& params, const std::string& path) {
    std::ostringstream os;
    os << kMagic << "\n" << params.size() << "\n";
    for (const Parameter& p : params.items()) {
        os << p.id << " " << p.tensor.rank();
        for (int d : p.tensor.shape()) os << " " << d;
        for (double v : p.tensor.data()) os << " " << format_double(v);
        os << "\n";
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    const std::string body = os.str();
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

void load_into(ParameterSet& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    std::string magic;
    if (!(in >> magic) || magic != kMagic) {
        throw IoError("checkpoint: bad magic in " + path + " (expected " + std::string(kMagic) + ")");
    }
    size_t count = 0;
    if (!(in >> count)) throw IoError("checkpoint: missing parameter count in " + path);
    if (count != params.size()) {
        throw IoError("checkpoint: parameter count mismatch in " + path + ": file has " +
                      std::to_string(count) + ", set has " + std::to_string(params.size()));
    }
    for (size_t k = 0; k < count; ++k) {
        std::string id;
        int rank = 0;
        if (!(in >> id >> rank)) throw IoError("checkpoint: truncated entry in " + path);
        Shape shape(rank);
        for (int i = 0; i < rank; ++i) {
            if (!(in >> shape[i])) throw IoError("checkpoint: truncated shape for " + id);
        }
        Parameter* p = params.find(id);
        if (!p) throw IoError("checkpoint: unknown parameter id " + id + " in " + path);
        if (p->tensor.shape() != shape) {
            throw IoError("checkpoint: shape mismatch for " + id + ": file " + shape_to_string(shape) +
                          " vs set " + shape_to_string(p->tensor.shape()));
        }
        auto& values = p->tensor.mutable_data();
        for (double& v : values) {
            if (!(in >> v)) throw IoError("checkpoint: truncated values for " + id);
        }
    }
}

}  // namespace promptstream::checkpoint
