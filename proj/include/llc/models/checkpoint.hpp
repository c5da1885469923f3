#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "llc/io/binary.hpp"
#include "llc/models/model.hpp"

namespace llc {

/// A model architecture with one parameter vector.
struct Checkpoint {
    ModelSpec spec;
    std::vector<double> params;
};

// Layout (little-endian throughout), version 1:
//   char[8]  "LLCCKPT1"
//   u32      version (1)
//   u32      endianness tag 0x01020304
//   u8       kind (0 = DLN, 1 = ReLU MLP)
//   u8       task (0 = regression, 1 = classification)
//   u8       has_bias
//   u8       float width in bytes (8 or 4)
//   u32      number of widths (M + 1)
//   u64[M+1] widths H_0..H_M
//   f64      noise variance
//   u64      parameter count d
//   float[d] parameters in the flat layout of ModelSpec
inline constexpr char kCheckpointMagic[9] = "LLCCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck, std::uint8_t float_width = 8) {
    ck.spec.validate();
    check_params(ck.spec, ck.params);
    io::write_magic(os, kCheckpointMagic);
    io::write_le<std::uint32_t>(os, kCheckpointVersion);
    io::write_le<std::uint32_t>(os, io::kEndianTag);
    io::write_le<std::uint8_t>(os, ck.spec.kind == ModelKind::dln ? 0 : 1);
    io::write_le<std::uint8_t>(os, ck.spec.task == Task::regression ? 0 : 1);
    io::write_le<std::uint8_t>(os, ck.spec.has_bias ? 1 : 0);
    io::write_le<std::uint8_t>(os, float_width);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.spec.widths.size()));
    for (auto h : ck.spec.widths) io::write_le<std::uint64_t>(os, h);
    io::write_le<double>(os, ck.spec.noise_variance);
    io::write_le<std::uint64_t>(os, ck.params.size());
    for (double v : ck.params) io::write_float(os, v, float_width);
}

inline Checkpoint read_checkpoint(std::istream& is) {
    io::expect_magic(is, kCheckpointMagic, "checkpoint");
    if (io::read_le<std::uint32_t>(is) != kCheckpointVersion) throw io::FormatError("unsupported checkpoint version");
    if (io::read_le<std::uint32_t>(is) != io::kEndianTag) throw io::FormatError("bad endianness tag");
    Checkpoint ck;
    const auto kind = io::read_le<std::uint8_t>(is);
    const auto task = io::read_le<std::uint8_t>(is);
    const auto bias = io::read_le<std::uint8_t>(is);
    const auto width = io::read_le<std::uint8_t>(is);
    if (kind > 1 || task > 1 || bias > 1) throw io::FormatError("corrupt checkpoint header");
    ck.spec.kind = kind == 0 ? ModelKind::dln : ModelKind::relu_mlp;
    ck.spec.task = task == 0 ? Task::regression : Task::classification;
    ck.spec.has_bias = bias == 1;
    const auto count = io::read_le<std::uint32_t>(is);
    if (count < 2 || count > 100000) throw io::FormatError("corrupt checkpoint width count");
    for (std::uint32_t i = 0; i < count; ++i) ck.spec.widths.push_back(io::read_le<std::uint64_t>(is));
    ck.spec.noise_variance = io::read_le<double>(is);
    try {
        ck.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw io::FormatError(std::string("corrupt checkpoint: ") + e.what());
    }
    const auto d = io::read_le<std::uint64_t>(is);
    if (d != ck.spec.param_count()) throw io::FormatError("checkpoint parameter count does not match architecture");
    ck.params.resize(d);
    for (auto& v : ck.params) v = io::read_float(is, width);
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck, std::uint8_t float_width = 8) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(os, ck, float_width);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint(is);
}

}  // namespace llc
