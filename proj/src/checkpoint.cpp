#include "paretoab/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <stdexcept>
#include <string>

namespace paretoab {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'P', 'B', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(U));
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.put(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      const int ch = in_.get();
      if (ch == std::char_traits<char>::eof()) throw std::runtime_error("bad checkpoint: truncated file");
      bits |= static_cast<U>(static_cast<unsigned char>(ch)) << (8 * i);
    }
    return std::bit_cast<T>(bits);
  }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    if (!in_.read(s.data(), static_cast<std::streamsize>(n))) {
      throw std::runtime_error("bad checkpoint: truncated file");
    }
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  Writer w(out);
  const Hyperparams& hp = ckpt.model.hp;
  w.bytes(std::string_view(kMagic.data(), kMagic.size()));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::int64_t>(hp.catalog_size);
  w.put<std::int32_t>(hp.embed_dim);
  w.put<std::int32_t>(hp.hidden_dim);
  w.put<std::int32_t>(hp.pref_dim);
  w.put<std::int32_t>(hp.max_prefix_len);
  w.put<double>(hp.position_decay);
  w.put<std::uint64_t>(hp.seed);
  w.put<std::uint32_t>(ckpt.epochs_completed);
  w.put<std::uint32_t>(7);
  ckpt.model.for_each([&](std::string_view name, std::span<const double> data) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.put<std::uint64_t>(data.size());
    for (double v : data) w.put<double>(v);
  });
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Reader r(in);
  const std::string magic = r.bytes(kMagic.size());
  if (magic != std::string_view(kMagic.data(), kMagic.size())) {
    throw std::runtime_error("bad checkpoint: wrong magic bytes in " + path.string());
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("bad checkpoint: version " + std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion));
  }
  Hyperparams hp;
  hp.catalog_size = r.get<std::int64_t>();
  hp.embed_dim = r.get<std::int32_t>();
  hp.hidden_dim = r.get<std::int32_t>();
  hp.pref_dim = r.get<std::int32_t>();
  hp.max_prefix_len = r.get<std::int32_t>();
  hp.position_decay = r.get<double>();
  hp.seed = r.get<std::uint64_t>();
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("bad checkpoint: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.epochs_completed = r.get<std::uint32_t>();
  ckpt.model.hp = hp;
  static_cast<ModelTensors<double>&>(ckpt.model) = ModelTensors<double>::zeros(hp);
  const auto n_tensors = r.get<std::uint32_t>();
  if (n_tensors != 7) throw std::runtime_error("bad checkpoint: unexpected tensor count");
  ckpt.model.for_each([&](std::string_view name, std::span<double> data) {
    const auto name_len = r.get<std::uint32_t>();
    if (name_len > 64 || r.bytes(name_len) != name) {
      throw std::runtime_error("bad checkpoint: expected tensor " + std::string(name));
    }
    if (r.get<std::uint64_t>() != data.size()) {
      throw std::runtime_error("bad checkpoint: shape mismatch for " + std::string(name));
    }
    for (double& v : data) v = r.get<double>();
  });
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("bad checkpoint: trailing bytes");
  return ckpt;
}

void require_catalog(const Model& model, std::int64_t catalog_size) {
  if (model.hp.catalog_size != catalog_size) {
    throw std::invalid_argument("model catalog size " + std::to_string(model.hp.catalog_size) +
                                " does not match dataset catalog size " + std::to_string(catalog_size));
  }
}

}  // namespace paretoab
