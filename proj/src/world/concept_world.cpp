#include "lure/world/concept_world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lure/core/errors.hpp"
#include "lure/core/text_io.hpp"

namespace lure {

ConceptWorld::ConceptWorld(std::vector<ConceptSpec> concepts, std::vector<int> erased_ids,
                           RealArray embeddings, std::uint64_t seed)
    : concepts_(std::move(concepts)), embeddings_(std::move(embeddings)), seed_(seed) {
  if (concepts_.empty()) throw InvalidArgument("world needs at least one concept");
  const int d = static_cast<int>(concepts_.size());
  for (int i = 0; i < d; ++i) {
    const auto& c = concepts_[static_cast<std::size_t>(i)];
    if (c.id != i) throw InvalidArgument("concept ids must be contiguous from 0");
    if (!(c.stdev > 0.0) || !std::isfinite(c.stdev))
      throw InvalidArgument("concept stdev must be positive");
    if (!std::isfinite(c.mean[0]) || !std::isfinite(c.mean[1]))
      throw InvalidArgument("concept mean must be finite");
  }
  if (embeddings_.rank() != 2 || embeddings_.rows() != concepts_.size() + 1)
    throw InvalidArgument("embedding table must have D+1 rows");
  embeddings_.require_finite("embedding table");

  std::sort(erased_ids.begin(), erased_ids.end());
  if (std::adjacent_find(erased_ids.begin(), erased_ids.end()) != erased_ids.end())
    throw InvalidArgument("duplicate erased id");
  for (int id : erased_ids)
    if (id < 0 || id >= d) throw InvalidArgument("erased id out of range");
  erased_ = std::move(erased_ids);
  for (int i = 0; i < d; ++i)
    if (!std::binary_search(erased_.begin(), erased_.end(), i)) preserved_.push_back(i);
}

const ConceptSpec& ConceptWorld::concept_spec(int id) const {
  if (id < 0 || id >= static_cast<int>(concepts_.size()))
    throw InvalidArgument("concept id out of range");
  return concepts_[static_cast<std::size_t>(id)];
}

bool ConceptWorld::is_erased(int id) const {
  return std::binary_search(erased_.begin(), erased_.end(), id);
}

ConceptWorld ConceptWorld::with_erased(std::vector<int> erased_ids) const {
  return ConceptWorld(concepts_, std::move(erased_ids), embeddings_, seed_);
}

ConceptWorld default_world(int d, double radius, double stdev, std::vector<int> erased_ids,
                           std::uint64_t seed, std::size_t embed_dim) {
  if (d < 2) throw InvalidArgument("default_world: need at least two concepts");
  if (!(radius > 0.0)) throw InvalidArgument("default_world: radius must be positive");
  const auto rows = static_cast<std::size_t>(d) + 1;
  if (embed_dim == 0) embed_dim = rows;
  if (embed_dim < rows) throw InvalidArgument("default_world: embed_dim must be at least d+1");

  std::vector<ConceptSpec> concepts;
  for (int i = 0; i < d; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / d;
    concepts.push_back({i, {radius * std::cos(angle), radius * std::sin(angle)}, stdev,
                        "c" + std::to_string(i)});
  }
  RealArray emb = RealArray::matrix(rows, embed_dim);
  for (int i = 0; i < d; ++i) emb(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
  return ConceptWorld(std::move(concepts), std::move(erased_ids), std::move(emb), seed);
}

std::vector<Point2> sample_concept_data(const ConceptWorld& world, int concept_id, std::size_t n,
                                        SeededRng& rng) {
  const auto& c = world.concept_spec(concept_id);
  if (n == 0) throw InvalidArgument("sample_concept_data: n must be at least 1");
  std::vector<Point2> out(n);
  for (auto& p : out) {
    p[0] = c.mean[0] + c.stdev * rng.normal();
    p[1] = c.mean[1] + c.stdev * rng.normal();
  }
  return out;
}

ExemplarSet make_exemplars(const ConceptWorld& world, int concept_id, std::size_t count,
                           SeededRng& rng) {
  return {concept_id, sample_concept_data(world, concept_id, count, rng)};
}

std::string serialize_world(const ConceptWorld& world) {
  std::ostringstream out;
  out << "lure-world 1\n";
  out << "seed " << world.seed() << "\n";
  out << "concepts " << world.num_concepts() << "\n";
  out << "embed_dim " << world.embed_dim() << "\n";
  for (const auto& c : world.concepts()) {
    out << "concept " << c.id << ' ' << format_real(c.mean[0]) << ' ' << format_real(c.mean[1])
        << ' ' << format_real(c.stdev) << ' ' << (c.label.empty() ? "-" : c.label) << "\n";
  }
  out << "erased";
  for (int id : world.erased_ids()) out << ' ' << id;
  out << "\n";
  const auto& emb = world.embeddings();
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    out << "embedding " << r;
    for (double v : emb.row(r)) out << ' ' << format_real(v);
    out << "\n";
  }
  out << "end\n";
  return out.str();
}

ConceptWorld parse_world(std::string_view text) {
  LineReader in(text, "world");
  auto header = in.expect("lure-world", 2);
  if (parse_int(header[1]) != 1) in.fail("unsupported world format version");
  const auto seed = static_cast<std::uint64_t>(std::stoull(std::string(in.expect("seed", 2)[1])));
  const auto d = static_cast<std::size_t>(parse_int(in.expect("concepts", 2)[1]));
  const auto e = static_cast<std::size_t>(parse_int(in.expect("embed_dim", 2)[1]));
  if (d == 0 || e == 0) in.fail("empty world");

  std::vector<ConceptSpec> concepts;
  for (std::size_t i = 0; i < d; ++i) {
    auto t = in.expect("concept", 6);
    ConceptSpec c;
    c.id = static_cast<int>(parse_int(t[1]));
    c.mean = {parse_real(t[2]), parse_real(t[3])};
    c.stdev = parse_real(t[4]);
    c.label = t[5] == "-" ? "" : std::string(t[5]);
    concepts.push_back(std::move(c));
  }
  auto erased_tokens = in.expect("erased");
  std::vector<int> erased;
  for (std::size_t i = 1; i < erased_tokens.size(); ++i)
    erased.push_back(static_cast<int>(parse_int(erased_tokens[i])));

  RealArray emb = RealArray::matrix(d + 1, e);
  for (std::size_t r = 0; r <= d; ++r) {
    auto t = in.expect("embedding", e + 2);
    if (t.size() != e + 2 || static_cast<std::size_t>(parse_int(t[1])) != r)
      in.fail("malformed embedding row");
    for (std::size_t c = 0; c < e; ++c) emb(r, c) = parse_real(t[c + 2]);
  }
  in.expect("end");
  return ConceptWorld(std::move(concepts), std::move(erased), std::move(emb), seed);
}

std::uint64_t world_hash(const ConceptWorld& world) { return hash_string(serialize_world(world)); }

}  // namespace lure
