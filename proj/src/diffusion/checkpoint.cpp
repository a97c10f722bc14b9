#include "lure/diffusion/checkpoint.hpp"

#include <sstream>

#include "lure/core/errors.hpp"
#include "lure/core/text_io.hpp"

namespace lure {

const std::string& Checkpoint::field(const std::string& key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  throw InvalidArgument("checkpoint has no field " + key);
}

void Checkpoint::set(std::string key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::move(key), std::move(value));
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto tok = trim(std::string_view(s).substr(start, comma == std::string::npos ? s.npos : comma - start));
    if (tok.empty()) throw InvalidArgument("empty entry in size list '" + s + "'");
    const auto v = parse_int(tok);
    if (v <= 0) throw InvalidArgument("size list entries must be positive");
    out.push_back(static_cast<std::size_t>(v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "lure-checkpoint " << kCheckpointVersion << "\n";
  out << "kind " << ckpt.kind << "\n";
  out << "fields " << ckpt.fields.size() << "\n";
  for (const auto& [k, v] : ckpt.fields) out << "field " << k << ' ' << v << "\n";
  const auto& layout = ckpt.params.layout();
  out << "segments " << layout.size() << "\n";
  for (std::size_t i = 0; i < layout.size(); ++i) {
    out << "segment " << layout[i].name << ' ' << join_sizes(layout[i].shape) << "\n";
    const auto values = ckpt.params.segment(i);
    for (std::size_t j = 0; j < values.size(); ++j) out << (j ? " " : "") << format_real(values[j]);
    out << "\n";
  }
  out << "end\n";
  return out.str();
}

Checkpoint parse_checkpoint(std::string_view text) {
  LineReader in(text, "checkpoint");
  const auto header = in.expect("lure-checkpoint", 2);
  if (parse_int(header[1]) != kCheckpointVersion) in.fail("unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.kind = std::string(in.expect("kind", 2)[1]);
  const auto nfields = parse_int(in.expect("fields", 2)[1]);
  for (std::int64_t i = 0; i < nfields; ++i) {
    const auto t = in.expect("field", 3);
    ckpt.fields.emplace_back(std::string(t[1]), std::string(t[2]));
  }
  const auto nseg = parse_int(in.expect("segments", 2)[1]);
  for (std::int64_t i = 0; i < nseg; ++i) {
    const auto t = in.expect("segment", 3);
    const auto idx = ckpt.params.add_segment(std::string(t[1]), split_sizes(std::string(t[2])));
    auto dst = ckpt.params.segment(idx);
    const auto values = in.next();
    if (values.size() != dst.size()) in.fail("segment value count does not match its shape");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = parse_real(values[j]);
  }
  in.expect("end");
  return ckpt;
}

Checkpoint denoiser_checkpoint(const Denoiser& d, const NoiseSchedule& s, std::uint64_t world_hash) {
  Checkpoint c;
  c.kind = "denoiser";
  const auto& a = d.arch();
  c.set("arch.num_concepts", std::to_string(a.num_concepts));
  c.set("arch.embed_dim", std::to_string(a.embed_dim));
  c.set("arch.time_embed_dim", std::to_string(a.time_embed_dim));
  c.set("arch.hidden", join_sizes(a.hidden));
  c.set("arch.time_steps", std::to_string(a.time_steps));
  c.set("schedule.steps", std::to_string(s.steps));
  c.set("schedule.beta_start", format_real(s.beta_start));
  c.set("schedule.beta_end", format_real(s.beta_end));
  c.set("world_hash", hex64(world_hash));
  c.params = d.params();
  return c;
}

LoadedDenoiser denoiser_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "denoiser") throw InvalidArgument("checkpoint kind is " + c.kind + ", not denoiser");
  DenoiserArch a;
  a.num_concepts = static_cast<std::size_t>(parse_int(c.field("arch.num_concepts")));
  a.embed_dim = static_cast<std::size_t>(parse_int(c.field("arch.embed_dim")));
  a.time_embed_dim = static_cast<std::size_t>(parse_int(c.field("arch.time_embed_dim")));
  a.hidden = split_sizes(c.field("arch.hidden"));
  a.time_steps = static_cast<int>(parse_int(c.field("arch.time_steps")));
  NoiseSchedule s = make_schedule(static_cast<int>(parse_int(c.field("schedule.steps"))),
                                  parse_real(c.field("schedule.beta_start")),
                                  parse_real(c.field("schedule.beta_end")));
  const auto hash = std::stoull(c.field("world_hash"), nullptr, 16);
  return {Denoiser(std::move(a), c.params), std::move(s), hash};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  atomic_write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace lure
