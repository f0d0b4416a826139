#include "webnav/dom.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "webnav/util.hpp"

namespace webnav {
namespace {

void index_tree(const DomNode& node, NodePath& path, std::map<int, NodePath>& index) {
  if (node.tag.empty()) throw ContractError("dom node with empty tag");
  if (node.ref < 1 || node.ref > kMaxRefs) {
    throw ContractError("dom node <" + node.tag + "> has no valid ref");
  }
  if (!index.emplace(node.ref, path).second) {
    throw ContractError("duplicate ref " + std::to_string(node.ref));
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const DomNode& child = node.children[i];
    if (!node.bbox.contains(child.bbox)) {
      throw GeometryError("bbox of <" + child.tag + "> escapes its parent <" + node.tag + ">");
    }
    path.push_back(static_cast<int>(i));
    index_tree(child, path, index);
    path.pop_back();
  }
}

template <typename Fn>
void preorder(DomNode& node, Fn&& fn) {
  fn(node);
  for (DomNode& c : node.children) preorder(c, fn);
}

template <typename Fn>
void preorder(const DomNode& node, Fn&& fn) {
  fn(node);
  for (const DomNode& c : node.children) preorder(c, fn);
}

void escape_into(std::ostringstream& out, const std::string& s) {
  out << '"';
  for (char c : s) {
    if (c == '"' || c == '\\') out << '\\';
    out << c;
  }
  out << '"';
}

void serialize_node(const DomNode& n, std::ostringstream& out) {
  out << '(' << n.tag << " ref=" << n.ref;
  auto put = [&](const std::string& key, const std::string& val) {
    if (val.empty()) return;
    out << ' ' << key << '=';
    escape_into(out, val);
  };
  put("id", n.attr("id"));
  put("class", n.attr("class"));
  for (const auto& [k, v] : n.attrs) {
    if (k != "id" && k != "class") put(k, v);
  }
  put("text", n.text);
  put("value", n.value);
  if (n.flags.checked) out << " checked";
  if (n.flags.selected) out << " selected";
  if (n.flags.focused) out << " focused";
  for (const DomNode& c : n.children) {
    out << ' ';
    serialize_node(c, out);
  }
  out << ')';
}

}  // namespace

std::size_t count_nodes(const DomNode& root) {
  std::size_t n = 0;
  preorder(root, [&](const DomNode&) { ++n; });
  return n;
}

int tag_code(const std::string& tag) {
  for (std::size_t i = 0; i < kTagTable.size(); ++i) {
    if (tag == kTagTable[i]) return static_cast<int>(i) + 1;
  }
  return kOtherTagCode;
}

DomSnapshot::DomSnapshot(DomNode root) : root_(std::move(root)) {
  if (count_nodes(root_) > static_cast<std::size_t>(kMaxRefs)) {
    throw CapacityError("tree exceeds " + std::to_string(kMaxRefs) + " nodes");
  }
  NodePath path;
  index_tree(root_, path, ref_index_);
}

const DomNode& node_at(const DomNode& root, const NodePath& path) {
  const DomNode* n = &root;
  for (int i : path) n = &n->children.at(static_cast<std::size_t>(i));
  return *n;
}

DomNode& node_at(DomNode& root, const NodePath& path) {
  DomNode* n = &root;
  for (int i : path) n = &n->children.at(static_cast<std::size_t>(i));
  return *n;
}

const DomNode* DomSnapshot::find(int ref) const {
  auto it = ref_index_.find(ref);
  return it == ref_index_.end() ? nullptr : &node_at(root_, it->second);
}

const DomNode* DomSnapshot::parent_of(int ref) const {
  auto it = ref_index_.find(ref);
  if (it == ref_index_.end() || it->second.empty()) return nullptr;
  NodePath parent(it->second.begin(), it->second.end() - 1);
  return &node_at(root_, parent);
}

std::vector<int> DomSnapshot::refs() const {
  std::vector<int> out;
  out.reserve(ref_index_.size());
  for (const auto& [ref, path] : ref_index_) out.push_back(ref);
  return out;
}

std::string to_string(RefMode mode) {
  return mode == RefMode::kOrdered ? "ordered" : "randomized";
}

RefMode parse_ref_mode(const std::string& s) {
  if (s == "ordered") return RefMode::kOrdered;
  if (s == "randomized") return RefMode::kRandomized;
  throw ConfigError("unknown ref mode '" + s + "'");
}

DomSnapshot assign_refs(DomNode root, RefMode mode, std::uint64_t seed) {
  const std::size_t n = count_nodes(root);
  if (n > static_cast<std::size_t>(kMaxRefs)) {
    throw CapacityError("tree has " + std::to_string(n) + " nodes; capacity is " +
                        std::to_string(kMaxRefs));
  }
  bool assigned = false;
  preorder(static_cast<const DomNode&>(root), [&](const DomNode& d) { assigned |= d.ref != 0; });
  if (assigned) throw ContractError("assign_refs: tree already carries refs");

  std::vector<int> labels;
  labels.reserve(n);
  if (mode == RefMode::kOrdered) {
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(i) + 1);
  } else {
    Rng rng(mix_seed(seed, 0x7265667321ULL));
    for (std::size_t idx : sample_indices(rng, kMaxRefs, n)) {
      labels.push_back(static_cast<int>(idx) + 1);
    }
    shuffle(labels, rng);
  }
  std::size_t next = 0;
  preorder(root, [&](DomNode& d) { d.ref = labels[next++]; });
  return DomSnapshot(std::move(root));
}

RefPermutation::RefPermutation(std::map<int, int> mapping, std::uint64_t seed)
    : mapping_(std::move(mapping)), seed_(seed) {
  std::set<int> image;
  for (const auto& [from, to] : mapping_) {
    if (!mapping_.count(to)) {
      throw InvalidPermutationError("ref " + std::to_string(to) + " is outside the domain");
    }
    if (!image.insert(to).second) {
      throw InvalidPermutationError("ref " + std::to_string(to) + " has two preimages");
    }
  }
}

RefPermutation RefPermutation::identity(const DomSnapshot& snapshot) {
  std::map<int, int> m;
  for (int r : snapshot.refs()) m[r] = r;
  return RefPermutation(std::move(m));
}

RefPermutation RefPermutation::random(const DomSnapshot& snapshot, std::uint64_t seed) {
  std::vector<int> from = snapshot.refs();
  std::vector<int> to = from;
  Rng rng(mix_seed(seed, 0x7065726dULL));
  shuffle(to, rng);
  std::map<int, int> m;
  for (std::size_t i = 0; i < from.size(); ++i) m[from[i]] = to[i];
  return RefPermutation(std::move(m), seed);
}

int RefPermutation::apply(int ref) const {
  auto it = mapping_.find(ref);
  if (it == mapping_.end()) {
    throw InvalidPermutationError("ref " + std::to_string(ref) + " is not in the permutation domain");
  }
  return it->second;
}

RefPermutation RefPermutation::inverse() const {
  std::map<int, int> inv;
  for (const auto& [from, to] : mapping_) inv[to] = from;
  return RefPermutation(std::move(inv), seed_);
}

DomSnapshot permute_refs(const DomSnapshot& snapshot, const RefPermutation& perm) {
  if (perm.mapping().size() != snapshot.size()) {
    throw InvalidPermutationError("permutation domain does not match the snapshot ref set");
  }
  for (const auto& [from, to] : perm.mapping()) {
    if (!snapshot.contains(from)) {
      throw InvalidPermutationError("ref " + std::to_string(from) + " not in snapshot");
    }
  }
  DomNode root = snapshot.root();
  preorder(root, [&](DomNode& d) { d.ref = perm.apply(d.ref); });
  return DomSnapshot(std::move(root));
}

std::string serialize_dom(const DomSnapshot& snapshot) {
  std::ostringstream out;
  serialize_node(snapshot.root(), out);
  return out.str();
}

RasterGrid rasterize(const DomSnapshot& snapshot) {
  const BBox page{0, 0, kPageSize, kPageSize};
  RasterGrid grid;
  preorder(snapshot.root(), [&](const DomNode& n) {
    if (n.bbox.w < 0 || n.bbox.h < 0 || !page.contains(n.bbox)) {
      throw GeometryError("bbox of <" + n.tag + " ref=" + std::to_string(n.ref) +
                          "> lies outside the page");
    }
    const auto code = static_cast<std::uint8_t>(tag_code(n.tag));
    // A cell is painted when its centre falls inside the box.
    for (int row = 0; row < kRasterSize; ++row) {
      const double cy = row * kRasterScale + kRasterScale / 2.0;
      if (cy < n.bbox.y || cy >= n.bbox.y + n.bbox.h) continue;
      for (int col = 0; col < kRasterSize; ++col) {
        const double cx = col * kRasterScale + kRasterScale / 2.0;
        if (cx < n.bbox.x || cx >= n.bbox.x + n.bbox.w) continue;
        grid.cells[row * kRasterSize + col] = code;
      }
    }
  });
  return grid;
}

}  // namespace webnav
