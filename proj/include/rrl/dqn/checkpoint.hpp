#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rrl/binary_io.hpp"
#include "rrl/dqn/mlp.hpp"

namespace rrl::dqn {

inline constexpr std::array<char, 4> kCheckpointMagic{'R', 'N', 'N', '1'};

// Layout: magic, u32 regularizer tag, u32 inputs, hidden, outputs, f64 l2
// lambda, then every parameter in declared order. All little-endian.
inline void write_checkpoint(std::ostream& os, const MlpQNet& net) {
    os.write(kCheckpointMagic.data(), 4);
    io::write_u32(os, static_cast<std::uint32_t>(net.regularizer()));
    io::write_u32(os, static_cast<std::uint32_t>(net.inputs()));
    io::write_u32(os, static_cast<std::uint32_t>(net.hidden()));
    io::write_u32(os, static_cast<std::uint32_t>(net.outputs()));
    io::write_f64(os, net.l2_lambda());
    for (double p : net.parameters()) io::write_f64(os, p);
}

inline MlpQNet read_checkpoint(std::istream& is) {
    io::LittleEndianReader in(is, "checkpoint");
    in.expect_magic(kCheckpointMagic);
    const std::uint32_t tag = in.u32();
    if (tag > static_cast<std::uint32_t>(Regularizer::weight_norm))
        throw io::FormatError("checkpoint: unknown regularizer tag " + std::to_string(tag));
    const std::uint32_t inputs = in.u32(), hidden = in.u32(), outputs = in.u32();
    constexpr std::uint32_t kMaxDim = 1u << 20;
    if (inputs == 0 || hidden == 0 || outputs == 0 || inputs > kMaxDim || hidden > kMaxDim || outputs > kMaxDim)
        throw io::FormatError("checkpoint: implausible dimensions " + std::to_string(inputs) + "x" +
                              std::to_string(hidden) + "x" + std::to_string(outputs));
    const double lambda = in.f64();
    MlpQNet net(inputs, hidden, outputs, static_cast<Regularizer>(tag), lambda);
    for (double& p : net.mutable_parameters()) p = in.f64();
    in.expect_end();
    net.sync();
    return net;
}

inline void save_checkpoint(const MlpQNet& net, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(os, net);
    if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

inline MlpQNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint(is);
}

}  // namespace rrl::dqn
