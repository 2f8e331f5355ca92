#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowcast/cells.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

// Checkpoint container: a plain-text header listing (name, shape, offset,
// trainable) per array, then the raw 64-bit floats back to back. Offsets are
// element counts into the data section. Round-trips are bit-exact.
//
//   flowcast-checkpoint 1
//   <name> <d0>[,<d1>...] <offset> <0|1>
//   ...
//   end
//   <binary doubles>

inline void save_checkpoint(const ParamSet& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::ostringstream header;
    header << "flowcast-checkpoint 1\n";
    std::size_t offset = 0;
    for (const auto& e : params.entries()) {
        header << e.name << ' ';
        const Shape& s = e.tensor.shape();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) header << ',';
            header << s[i];
        }
        header << ' ' << offset << ' ' << (e.trainable ? 1 : 0) << '\n';
        offset += e.tensor.numel();
    }
    header << "end\n";
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& e : params.entries()) {
        out.write(reinterpret_cast<const char*>(e.tensor.value().data()),
                  static_cast<std::streamsize>(e.tensor.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

inline ParamSet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "flowcast-checkpoint 1") {
        throw std::runtime_error(path + ": not a flowcast checkpoint");
    }
    struct Entry {
        std::string name;
        Shape shape;
        std::size_t offset;
        bool trainable;
    };
    std::vector<Entry> headers;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream ls(line);
        Entry e;
        std::string shape_str;
        int trainable = 1;
        if (!(ls >> e.name >> shape_str >> e.offset >> trainable)) {
            throw std::runtime_error(path + ": malformed checkpoint header line '" + line + "'");
        }
        std::size_t pos = 0;
        while (pos < shape_str.size()) {
            std::size_t comma = shape_str.find(',', pos);
            std::string dim = shape_str.substr(pos, comma == std::string::npos ? comma : comma - pos);
            e.shape.push_back(static_cast<std::size_t>(std::stoull(dim)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        e.trainable = trainable != 0;
        headers.push_back(std::move(e));
    }
    ParamSet out;
    for (const auto& e : headers) {
        std::size_t n = 1;
        for (std::size_t d : e.shape) n *= d;
        std::vector<double> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) {
            throw std::runtime_error(path + ": truncated data for array '" + e.name + "'");
        }
        out.add(e.name, Tensor::from(e.shape, std::move(buf), e.trainable), e.trainable);
    }
    return out;
}

/// Restores a checkpoint into a freshly configured cell; every array must
/// match by name and shape.
inline void load_into(CellParams& cell, const std::string& path) {
    ParamSet loaded = load_checkpoint(path);
    if (loaded.entries().size() != cell.params.entries().size()) {
        throw std::runtime_error(path + ": array count does not match cell configuration");
    }
    for (auto& e : cell.params.entries()) {
        const Tensor& src = loaded.at(e.name);
        if (src.shape() != e.tensor.shape()) {
            throw std::runtime_error(path + ": shape mismatch for array '" + e.name + "'");
        }
        std::copy(src.value().begin(), src.value().end(), e.tensor.mutable_value().begin());
    }
}

}  // namespace flowcast
