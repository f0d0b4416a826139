#pragma once
// Attributed element trees with reference numbers, their text serialization
// and a coarse symbolic rasterization of the page layout.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace webnav {

inline constexpr int kMaxRefs = 500;
inline constexpr int kPageSize = 160;
inline constexpr int kRasterSize = 32;
inline constexpr int kRasterCells = kRasterSize * kRasterSize;
inline constexpr int kRasterScale = kPageSize / kRasterSize;

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(const BBox& o) const {
    return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct NodeFlags {
  bool checked = false;
  bool selected = false;
  bool focused = false;
  friend bool operator==(const NodeFlags&, const NodeFlags&) = default;
};

struct DomNode {
  std::string tag;
  int ref = 0;  // 0 = unassigned
  std::map<std::string, std::string> attrs;
  std::string text;
  std::string value;
  NodeFlags flags;
  BBox bbox;
  std::vector<DomNode> children;

  std::string attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? std::string() : it->second;
  }
  friend bool operator==(const DomNode&, const DomNode&) = default;
};

std::size_t count_nodes(const DomNode& root);

// Fixed tag-class codes used by the rasterizer and the policy features.
// Tags outside the table map to kOtherTagCode.
inline constexpr std::array<const char*, 12> kTagTable = {
    "body", "div", "span", "p", "h3", "button",
    "input", "label", "select", "option", "form", "a"};
inline constexpr int kOtherTagCode = 13;
inline constexpr int kNumTagCodes = 13;
int tag_code(const std::string& tag);

using NodePath = std::vector<int>;

// Immutable tree whose nodes all carry unique refs.
class DomSnapshot {
 public:
  DomSnapshot() = default;
  // Validates refs, tag names, node count and bbox containment.
  explicit DomSnapshot(DomNode root);

  const DomNode& root() const { return root_; }
  const std::map<int, NodePath>& ref_index() const { return ref_index_; }

  const DomNode* find(int ref) const;
  // Parent of the node carrying `ref`; nullptr for the root or unknown refs.
  const DomNode* parent_of(int ref) const;
  bool contains(int ref) const { return ref_index_.count(ref) != 0; }
  std::vector<int> refs() const;
  std::size_t size() const { return ref_index_.size(); }

  friend bool operator==(const DomSnapshot& a, const DomSnapshot& b) {
    return a.root_ == b.root_;
  }

 private:
  DomNode root_;
  std::map<int, NodePath> ref_index_;
};

const DomNode& node_at(const DomNode& root, const NodePath& path);
DomNode& node_at(DomNode& root, const NodePath& path);

enum class RefMode { kOrdered, kRandomized };
std::string to_string(RefMode mode);
RefMode parse_ref_mode(const std::string& s);

// Ordered mode numbers nodes 1..N in preorder. Randomized mode draws a
// uniform N-subset of [1, 500] and assigns it in seed-determined order.
DomSnapshot assign_refs(DomNode root, RefMode mode, std::uint64_t seed);

class RefPermutation {
 public:
  // Throws InvalidPermutationError unless `mapping` is a bijection of its
  // key set onto itself.
  explicit RefPermutation(std::map<int, int> mapping, std::uint64_t seed = 0);

  static RefPermutation identity(const DomSnapshot& snapshot);
  static RefPermutation random(const DomSnapshot& snapshot, std::uint64_t seed);

  int apply(int ref) const;
  RefPermutation inverse() const;
  const std::map<int, int>& mapping() const { return mapping_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::map<int, int> mapping_;
  std::uint64_t seed_ = 0;
};

DomSnapshot permute_refs(const DomSnapshot& snapshot, const RefPermutation& perm);

// Deterministic s-expression rendering, e.g. `(button ref=4 text="ok")`.
std::string serialize_dom(const DomSnapshot& snapshot);

struct RasterGrid {
  std::array<std::uint8_t, kRasterCells> cells{};
  std::uint8_t at(int row, int col) const { return cells[row * kRasterSize + col]; }
  friend bool operator==(const RasterGrid&, const RasterGrid&) = default;
};

RasterGrid rasterize(const DomSnapshot& snapshot);

nlohmann::json dom_to_json(const DomNode& node);
// Throws ParseError naming the offending field.
DomNode dom_from_json(const nlohmann::json& j, const std::string& where = "dom");

}  // namespace webnav
