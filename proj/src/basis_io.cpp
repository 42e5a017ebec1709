#include "navslip/basis.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace navslip {
namespace {

using nlohmann::json;

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 1099511628211ULL;
    }
  }
  template <class T>
  void add(const T& v) {
    add(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

ModeKind kind_from_string(const std::string& s) {
  if (s == "torus-wave") return ModeKind::TorusWave;
  if (s == "toroidal") return ModeKind::Toroidal;
  if (s == "poloidal") return ModeKind::Poloidal;
  if (s == "mean") return ModeKind::Mean;
  throw std::runtime_error("basis file: unknown mode kind '" + s + "'");
}

}  // namespace

std::string basis_hash(const BasisSet& basis) {
  Fnv1a h;
  h.add(static_cast<int>(basis.domain.geometry));
  for (double l : basis.domain.lengths) h.add(l);
  h.add(basis.domain.friction);
  for (int n : basis.grid.n) h.add(n);
  h.add(basis.grid.oversampling);
  for (const auto& w : basis.modes) {
    h.add(static_cast<int>(w.kind));
    h.add(static_cast<int>(w.trig));
    for (int k : w.wavevector) h.add(k);
    h.add(w.vertical_index);
    h.add(w.polarization);
    for (double a : w.amplitude) h.add(a);
    for (double c : w.profile) h.add(c);
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h.digest();
  return os.str();
}

void save_basis(const BasisSet& basis, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kBasisFormatVersion;
  doc["kind"] = "navslip-basis";
  doc["domain"] = {{"geometry", to_string(basis.domain.geometry)},
                   {"lengths", basis.domain.lengths},
                   {"friction", basis.domain.friction}};
  doc["grid"] = {{"nodes", basis.grid.n}, {"oversampling", basis.grid.oversampling}};
  doc["resolution"] = {{"max_wavenumber", basis.resolution.max_wavenumber},
                       {"profile_degree", basis.resolution.profile_degree}};
  json modes = json::array();
  for (const auto& w : basis.modes) {
    modes.push_back({{"index", w.index},
                     {"kind", to_string(w.kind)},
                     {"trig", w.trig == Trig::Cos ? "cos" : "sin"},
                     {"wavevector", w.wavevector},
                     {"vertical_index", w.vertical_index},
                     {"polarization", w.polarization},
                     {"amplitude", w.amplitude},
                     {"profile", w.profile},
                     {"h1_energy", w.h1_energy},
                     {"boundary_energy", w.boundary_energy},
                     {"vertical_eigenvalue", w.vertical_eigenvalue}});
  }
  doc["modes"] = std::move(modes);
  doc["hash"] = basis_hash(basis);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write basis file " + path.string());
  out << doc.dump(1) << '\n';
}

BasisSet load_basis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read basis file " + path.string());
  const json doc = json::parse(in);
  if (doc.value("format_version", -1) != kBasisFormatVersion)
    throw std::runtime_error("basis file: unsupported format_version");
  BasisSet basis;
  const auto& d = doc.at("domain");
  basis.domain.geometry = d.at("geometry") == "torus" ? Geometry::Torus : Geometry::Slab;
  basis.domain.lengths = d.at("lengths").get<std::array<double, 3>>();
  basis.domain.friction = d.at("friction").get<double>();
  basis.domain.validate();
  basis.resolution.max_wavenumber = doc.at("resolution").at("max_wavenumber").get<std::array<int, 3>>();
  basis.resolution.profile_degree = doc.at("resolution").at("profile_degree").get<int>();
  basis.grid = make_grid(basis.domain, doc.at("grid").at("nodes").get<std::array<int, 3>>(),
                         doc.at("grid").at("oversampling").get<double>());
  for (const auto& jm : doc.at("modes")) {
    BasisMode w;
    w.index = jm.at("index");
    w.kind = kind_from_string(jm.at("kind"));
    w.trig = jm.at("trig") == "cos" ? Trig::Cos : Trig::Sin;
    w.wavevector = jm.at("wavevector").get<std::array<int, 3>>();
    w.vertical_index = jm.at("vertical_index");
    w.polarization = jm.at("polarization");
    w.amplitude = jm.at("amplitude").get<std::array<double, 3>>();
    w.profile = jm.at("profile").get<std::vector<double>>();
    w.h1_energy = jm.at("h1_energy");
    w.boundary_energy = jm.at("boundary_energy");
    w.vertical_eigenvalue = jm.at("vertical_eigenvalue");
    basis.modes.push_back(std::move(w));
  }
  refresh_grams(basis);
  if (doc.contains("hash") && doc.at("hash") != basis_hash(basis))
    throw std::runtime_error("basis file: hash mismatch, file is corrupted");
  return basis;
}

}  // namespace navslip
