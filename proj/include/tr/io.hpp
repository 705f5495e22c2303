#pragma once

#include <optional>
#include <string>

#include "tr/probes.hpp"
#include "tr/tensor.hpp"

namespace tr {

/** Ring decomposition in which every mode shares one core (cyclically
 *  symmetric representation). `order` is the number of modes d. */
struct SharedCoreRing {
    std::int64_t order = 0;
    DenseTensor core;

    /** Expands to a d-core decomposition (d copies of the shared core). */
    RingDecomposition to_ring() const;
};

/** Either kind of stored decomposition. */
struct StoredDecomposition {
    std::optional<RingDecomposition> ring;
    std::optional<SharedCoreRing> shared;

    bool is_shared() const { return shared.has_value(); }
    RingDecomposition as_ring() const { return shared ? shared->to_ring() : *ring; }
};

/** Dense tensor file (.trt): magic "TRT1", u32 order d, d u64 mode sizes,
 *  then prod(n_k) entries as little-endian f64 (re, im) pairs in column-major
 *  order. */
void write_trt(const std::string& path, const DenseTensor& t);
DenseTensor read_trt(const std::string& path);

/** Core file (.trc): magic "TRC1", u32 d, u32 r, u32 flags (bit 0 = shared
 *  core), then the cores: d of them, or a single one when the flag is set.
 *  Each core is serialized headerless as u32 order (=3), its dims as u64,
 *  then (re, im) f64 pairs column-major. */
void write_trc(const std::string& path, const RingDecomposition& ring);
void write_trc(const std::string& path, const SharedCoreRing& shared);
StoredDecomposition read_trc(const std::string& path);

/** JSON mirrors: {"dims": [...], "data": [[re, im], ...]} with column-major
 *  data; decompositions add {"rank": r, "shared": bool, "cores": [tensor...]}. */
void write_tensor_json(const std::string& path, const DenseTensor& t);
DenseTensor read_tensor_json(const std::string& path);
void write_decomposition_json(const std::string& path, const StoredDecomposition& d);
StoredDecomposition read_decomposition_json(const std::string& path);

/** JSON probe plan:
 *  {"pair_a": {"first": [...], "second": [...], "gamma": [...]},
 *   "pair_b": {...}, "companion": [...], "mode_gammas": [[...], ...]}.
 *  All indices are 0-based; shape validity is checked at use time against the
 *  tensor, not here. */
void write_probe_config_json(const std::string& path, const ProbeConfig& cfg);
ProbeConfig read_probe_config_json(const std::string& path);

}  // namespace tr
