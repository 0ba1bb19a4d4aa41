#include "gesturelab/checkpoint.hpp"

#include "gesturelab/binary_io.hpp"
#include "gesturelab/text_io.hpp"

#include <cmath>

namespace gesturelab::nn {

std::string encode_checkpoint(const DenseNet& net) {
  std::string out(kCheckpointMagic);
  binary::put<std::uint32_t>(out, kCheckpointVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& l : net.layers()) {
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(l.inputs()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(l.outputs()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(l.activation));
    binary::put<double>(out, l.dropout_rate);
  }
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) binary::put<double>(out, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) binary::put<double>(out, l.bias(r));
  }
  return out;
}

DenseNet decode_checkpoint(std::string_view bytes) {
  binary::Reader in(bytes, "checkpoint");
  if (in.take(4) != kCheckpointMagic) fail(ErrorCategory::format, "checkpoint: bad magic (expected MGW1)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorCategory::format, "checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  if (count == 0 || count > 4096) fail(ErrorCategory::format, "checkpoint: implausible layer count");
  std::vector<DenseLayer> layers(count);
  for (auto& l : layers) {
    const auto n_in = in.get<std::uint32_t>();
    const auto n_out = in.get<std::uint32_t>();
    const auto tag = in.get<std::uint32_t>();
    const auto dropout = in.get<double>();
    if (tag > static_cast<std::uint32_t>(Activation::sigmoid)) {
      fail(ErrorCategory::format, "checkpoint: unknown activation tag " + std::to_string(tag));
    }
    if (n_in == 0 || n_out == 0) fail(ErrorCategory::format, "checkpoint: zero layer width");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorCategory::format, "checkpoint: dropout rate out of range");
    l.weight.resize(n_out, n_in);
    l.bias.resize(n_out);
    l.activation = static_cast<Activation>(tag);
    l.dropout_rate = dropout;
  }
  std::size_t params = 0;
  for (const auto& l : layers) params += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  if (in.remaining() != params * sizeof(double)) {
    fail(ErrorCategory::format, "checkpoint: parameter block is " + std::to_string(in.remaining()) +
                                    " bytes, header implies " + std::to_string(params * sizeof(double)));
  }
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = in.get<double>();
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = in.get<double>();
  }
  return DenseNet(std::move(layers));
}

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net) {
  text::write_file(path, encode_checkpoint(net));
}

DenseNet load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(text::read_file(path)); }

}  // namespace gesturelab::nn
