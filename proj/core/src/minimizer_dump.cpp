#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "homlab/cell_solver.hpp"

namespace homlab {
namespace {

static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'H', 'M', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("minimizer dump: truncated file");
  return value;
}

}  // namespace

void write_minimizer_dump(const std::filesystem::path& path, const CellProblem& p, const SolveReport& r,
                          const std::string& sidecar_json) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid.components));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid.n));
  put<double>(out, p.grid.side);
  for (const double c : p.grid.center) put<double>(out, c);
  out.write(reinterpret_cast<const char*>(r.minimizer.data()),
            static_cast<std::streamsize>(r.minimizer.size() * sizeof(double)));
  std::ofstream side(path.string() + ".json");
  side << sidecar_json << '\n';
}

MinimizerDump read_minimizer_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("minimizer dump: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("minimizer dump: unsupported version");
  MinimizerDump dump;
  dump.dim = static_cast<int>(get<std::uint32_t>(in));
  dump.components = static_cast<int>(get<std::uint32_t>(in));
  dump.n = static_cast<int>(get<std::uint32_t>(in));
  dump.side = get<double>(in);
  for (int k = 0; k < dump.dim; ++k) dump.center.push_back(get<double>(in));
  std::size_t count = static_cast<std::size_t>(dump.components);
  for (int k = 0; k < dump.dim; ++k) count *= static_cast<std::size_t>(dump.n) + 1;
  dump.values.resize(count);
  in.read(reinterpret_cast<char*>(dump.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("minimizer dump: truncated payload");
  return dump;
}

}  // namespace homlab
