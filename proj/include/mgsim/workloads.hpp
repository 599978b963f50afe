#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim/core.hpp"

namespace mgsim {

enum class OpKind : std::uint8_t { Read, Write, Barrier };

/// One trace line. Barriers are global: every CU must reach barrier n before
/// any CU continues past it; `cu` is unused for them.
struct TraceOp {
  CuId cu = 0;
  OpKind kind = OpKind::Read;
  std::uint64_t addr = 0;
  std::uint32_t barrier_id = 0;

  friend bool operator==(const TraceOp&, const TraceOp&) = default;
};

struct Trace {
  std::vector<TraceOp> ops;
  friend bool operator==(const Trace&, const Trace&) = default;
};

// Text format: `<cu> <R|W> <hex_addr>` or `BARRIER <id>`; `#` starts a comment.
Trace parse_trace(std::istream& in);
Trace parse_trace_text(std::string_view text);
Trace load_trace(const std::string& path);
void emit_trace(std::ostream& os, const Trace& t);
std::string emit_trace_text(const Trace& t);

/// Op as seen by one CU.
struct CuOp {
  OpKind kind = OpKind::Read;
  std::uint64_t addr = 0;
  std::uint32_t barrier_id = 0;
};

class CuStream {
 public:
  virtual ~CuStream() = default;
  /// Next op in program order; false at the end of the stream.
  virtual bool next(CuOp& op) = 0;
};

/// Per-CU op streams, generated lazily where possible so large vector runs do
/// not have to hold the whole trace.
class Workload {
 public:
  virtual ~Workload() = default;
  virtual std::uint32_t cus() const = 0;
  virtual std::unique_ptr<CuStream> stream(CuId cu) const = 0;
  /// Stable identity of the op sequence; runs being compared must agree.
  virtual std::string id() const = 0;
  /// Whether any block is touched by more than one CU.
  virtual bool shares_data() const = 0;
  virtual std::uint64_t op_count() const = 0;
};

/// Streams taken from a parsed trace. Throws ConfigError if a CU id is out of
/// range for `total_cus`.
std::unique_ptr<Workload> trace_workload(Trace t, std::uint32_t total_cus);
/// Flattens a workload back into a trace: each barrier-delimited phase lists
/// CU 0's ops, then CU 1's, and so on. Requires every CU to see the same
/// barrier sequence.
Trace materialize(const Workload& w);

enum class XtremeVariant : std::uint8_t { One = 1, Two = 2, Three = 3 };

struct XtremeSpec {
  XtremeVariant variant = XtremeVariant::One;
  std::uint64_t vector_bytes = 192 * 1024;  // each of A, B and C
  std::uint32_t repeats = 10;
  std::uint32_t gpus = 4;
  std::uint32_t cus_per_gpu = 32;
  std::uint64_t base_addr = 0;

  void validate() const;
  std::uint32_t total_cus() const { return gpus * cus_per_gpu; }
};

/// C = A + B style kernels over per-CU slices; ops are emitted per 64 B block
/// (read A, read B, write C for each block), with barriers between steps.
///   1: repeats x (C=A+B), then repeats x (A=C+B), all on private slices.
///   2: C=A+B; repeats x (each even CU computes its odd neighbour's A=C+B);
///      C=A+B again.
///   3: like 2, but the even CU writes the odd CU's slice on the next GPU.
std::unique_ptr<Workload> xtreme_workload(const XtremeSpec& spec);
Trace gen_xtreme(const XtremeSpec& spec);

/// One read-modify-write sweep per CU over a private slice of `total_bytes`.
std::unique_ptr<Workload> stream_workload(std::uint64_t total_bytes, std::uint32_t gpus, std::uint32_t cus_per_gpu);
Trace gen_stream(std::uint64_t total_bytes, std::uint32_t gpus, std::uint32_t cus_per_gpu);

struct RandomSpec {
  std::uint64_t seed = 1;
  std::uint64_t n_ops = 200;
  std::uint32_t n_addrs = 8;
  double write_ratio = 0.3;
  std::uint32_t gpus = 2;
  std::uint32_t cus_per_gpu = 4;
  std::uint32_t barrier_every = 50;
  std::uint64_t stride = 2048;  // bytes between pool addresses
};

/// Uniform random ops over a small shared pool, barriers interleaved.
Trace gen_random(const RandomSpec& spec);

}  // namespace mgsim
