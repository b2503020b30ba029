#include "neckfol/spherecalc/cache.hpp"

#include "neckfol/core/binio.hpp"
#include "neckfol/core/error.hpp"

#include <filesystem>
#include <sstream>

namespace neckfol {

namespace {

void write_params(BinWriter& w, const StencilParams& p) {
  w.i64(p.mls_degree);
  w.i64(p.neighbors);
  w.f64(p.weight_width);
  w.i64(p.band_degree);
  w.i64(p.quadrature_degree);
  w.i64(p.repulsion_iters);
}

StencilParams read_params(BinReader& r) {
  StencilParams p;
  p.mls_degree = static_cast<int>(r.i64());
  p.neighbors = static_cast<int>(r.i64());
  p.weight_width = r.f64();
  p.band_degree = static_cast<int>(r.i64());
  p.quadrature_degree = static_cast<int>(r.i64());
  p.repulsion_iters = static_cast<int>(r.i64());
  return p;
}

void write_group(BinWriter& w, const GroupAction& g) {
  w.str(g.name());
  w.i64(g.dim());
  w.u64(g.generators().size());
  for (const auto& s : g.generators()) w.mat(Mat(s));
}

GroupAction read_group(BinReader& r) {
  const std::string name = r.str();
  const int n = static_cast<int>(r.i64());
  const auto count = r.u64();
  std::vector<SMat> gens;
  for (std::uint64_t i = 0; i < count; ++i) gens.emplace_back(r.mat());
  return GroupAction(n, gens, name);
}

}  // namespace

void save_cloud(const std::string& path, const NodeCloud& cloud) {
  BinWriter w(path, kCloudCacheKind, kSphereCacheVersion);
  w.i64(cloud.n());
  w.u64(cloud.seed());
  write_params(w, cloud.params());
  write_group(w, cloud.symmetry());
  w.mat(cloud.nodes());
  w.close();
}

CloudPtr load_cloud(const std::string& path) {
  BinReader r(path, kCloudCacheKind, kSphereCacheVersion);
  const int n = static_cast<int>(r.i64());
  const std::uint64_t seed = r.u64();
  const StencilParams p = read_params(r);
  const GroupAction g = read_group(r);
  const Mat nodes = r.mat();
  return build_cloud_from_nodes(n, nodes, seed, g, p);
}

void save_basis(const std::string& path, const SpectralBasis& basis) {
  BinWriter w(path, kBasisCacheKind, kSphereCacheVersion);
  w.i64(basis.degree);
  w.u64(static_cast<std::uint64_t>(basis.cloud->size()));
  write_group(w, basis.group);
  w.vec(basis.eigenvalues);
  w.mat(basis.vectors);
  Vec flags(basis.count()), deg(basis.count());
  for (Eigen::Index k = 0; k < basis.count(); ++k) {
    flags(k) = basis.invariant[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
    deg(k) = basis.harmonic_degree[static_cast<std::size_t>(k)];
  }
  w.vec(flags);
  w.vec(deg);
  w.close();
}

SpectralBasis load_basis(const std::string& path, CloudPtr cloud) {
  BinReader r(path, kBasisCacheKind, kSphereCacheVersion);
  SpectralBasis b;
  b.cloud = std::move(cloud);
  b.degree = static_cast<int>(r.i64());
  const auto N = r.u64();
  if (N != static_cast<std::uint64_t>(b.cloud->size())) fail(ErrorCode::IoError, "basis cache belongs to another cloud");
  b.group = read_group(r);
  b.eigenvalues = r.vec();
  b.vectors = r.mat();
  const Vec flags = r.vec();
  const Vec deg = r.vec();
  for (Eigen::Index k = 0; k < flags.size(); ++k) {
    b.invariant.push_back(flags(k) > 0.5);
    b.harmonic_degree.push_back(static_cast<int>(deg(k)));
  }
  return b;
}

std::string cloud_cache_key(int n, int node_count, std::uint64_t seed, const GroupAction& group,
                            const StencilParams& p) {
  std::ostringstream os;
  os << "cloud_n" << n << "_N" << node_count << "_s" << seed << "_L" << p.band_degree << "_" << group.name() << "_p"
     << p.mls_degree << "k" << p.neighbors << "w" << p.weight_width << "q" << p.quadrature_degree << "r"
     << p.repulsion_iters;
  return os.str();
}

CloudPtr cached_cloud(const std::string& dir, int n, int node_count, std::uint64_t seed, const GroupAction& group,
                      const StencilParams& params) {
  if (dir.empty()) return build_cloud(n, node_count, seed, group, params);
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + cloud_cache_key(n, node_count, seed, group, params) + ".nfc";
  if (std::filesystem::exists(path)) {
    try {
      return load_cloud(path);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IoError) throw;
    }
  }
  CloudPtr c = build_cloud(n, node_count, seed, group, params);
  save_cloud(path, *c);
  return c;
}

SpectralBasis cached_basis(const std::string& dir, CloudPtr cloud, int degree, const GroupAction& group) {
  if (dir.empty()) return build_spectral_basis(cloud, degree, group);
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" +
                           cloud_cache_key(cloud->n(), static_cast<int>(cloud->size()), cloud->seed(), cloud->symmetry(),
                                           cloud->params()) +
                           "_basis_L" + std::to_string(degree) + "_" + group.name() + ".nfb";
  if (std::filesystem::exists(path)) {
    try {
      return load_basis(path, cloud);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IoError) throw;
    }
  }
  SpectralBasis b = build_spectral_basis(cloud, degree, group);
  save_basis(path, b);
  return b;
}

}  // namespace neckfol
