#pragma once

#include "neckfol/spherecalc/spectral.hpp"

#include <string>

namespace neckfol {

// Disk caches for clouds and spectral bases in the versioned binary container.
// Clouds store their nodes and build parameters; operators are rebuilt
// deterministically on load.
inline constexpr std::uint32_t kCloudCacheKind = 0x434C4F55;  // "CLOU"
inline constexpr std::uint32_t kBasisCacheKind = 0x42415349;  // "BASI"
inline constexpr std::uint32_t kSphereCacheVersion = 1;

void save_cloud(const std::string& path, const NodeCloud& cloud);
CloudPtr load_cloud(const std::string& path);
void save_basis(const std::string& path, const SpectralBasis& basis);
SpectralBasis load_basis(const std::string& path, CloudPtr cloud);

// File stem for (n, node_count, seed, L, group, stencil parameters).
std::string cloud_cache_key(int n, int node_count, std::uint64_t seed, const GroupAction& group,
                            const StencilParams& params);

// Loads from `dir` when a matching cache exists, otherwise builds and stores.
// An empty dir disables caching.
CloudPtr cached_cloud(const std::string& dir, int n, int node_count, std::uint64_t seed, const GroupAction& group,
                      const StencilParams& params = {});
SpectralBasis cached_basis(const std::string& dir, CloudPtr cloud, int degree, const GroupAction& group);

}  // namespace neckfol
