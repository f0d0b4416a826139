// Instance generators, interaction rules and scripted solutions for the
// eight simulated tasks.
#include <algorithm>
#include <functional>
#include <sstream>

#include "webnav/env.hpp"
#include "webnav/util.hpp"
#include "tasks_internal.hpp"

namespace webnav::detail {
extern const char* const kSynonymTable;
}  // namespace webnav::detail

namespace webnav {
using detail::Instance;
using detail::Outcome;
namespace {

const std::vector<std::string> kButtonWords = {
    "ok", "yes", "no", "cancel", "next", "previous", "accept", "decline",
    "confirm", "close", "open", "save", "delete", "edit", "back", "continue",
    "reset", "apply", "done", "retry", "skip", "start", "stop", "send",
    "share", "undo", "redo", "search", "help", "login"};

const std::vector<std::string> kTypingWords = {
    "hello", "world", "apple", "river", "garden", "pencil", "window", "yellow",
    "summer", "winter", "rocket", "silver", "forest", "planet", "coffee", "bridge",
    "guitar", "castle", "dragon", "island", "jungle", "lemon", "mirror", "orange",
    "pepper", "rabbit", "saddle", "tomato", "violet", "walnut", "anchor", "basket",
    "candle", "doctor", "engine", "falcon", "ginger", "hammer", "jacket", "kitten",
    "ladder", "magnet", "napkin", "oyster", "parrot", "quartz", "ribbon", "spider",
    "tunnel", "velvet", "wizard", "zipper", "banana", "cherry", "marble", "puzzle",
    "shadow", "thunder", "blossom", "harbor"};

const std::vector<std::string> kCheckboxWords = {
    "kiwi", "lemon", "mango", "grape", "peach", "plum", "melon", "olive",
    "tiger", "zebra", "otter", "moose", "eagle", "shark", "koala", "camel",
    "piano", "violin", "flute", "drums", "cello", "harp", "oboe", "tuba"};

const std::vector<std::string> kColors = {
    "red", "blue", "green", "yellow", "purple", "orange",
    "pink", "brown", "black", "white", "gray", "cyan"};

const std::vector<std::string> kCities = {
    "Philadelphia", "Charlotte", "Boston", "Denver", "Seattle", "Chicago",
    "Atlanta", "Houston", "Phoenix", "Dallas", "Miami", "Portland"};

const std::vector<std::string> kFillerWords = {
    "lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing",
    "elit", "sed", "do", "eiusmod", "tempor", "incididunt", "ut", "labore"};

constexpr int kDayOptions = 12;

DomNode make(std::string tag, BBox box, std::string id = {}, std::string cls = {},
             std::string text = {}) {
  DomNode n;
  n.tag = std::move(tag);
  n.bbox = box;
  if (!id.empty()) n.attrs["id"] = std::move(id);
  if (!cls.empty()) n.attrs["class"] = std::move(cls);
  n.text = std::move(text);
  return n;
}

DomNode page_root(std::vector<DomNode> area_children) {
  DomNode body = make("body", {0, 0, kPageSize, kPageSize});
  DomNode area = make("div", {0, 0, kPageSize, kPageSize}, "area");
  area.children = std::move(area_children);
  body.children.push_back(std::move(area));
  return body;
}

// Random distinct cells of a cols x rows grid over the page area.
std::vector<BBox> grid_slots(Rng& rng, int cols, int rows, std::size_t k) {
  std::vector<std::size_t> cells = sample_indices(rng, static_cast<std::size_t>(cols * rows), k);
  shuffle(cells, rng);
  const int cw = kPageSize / cols;
  const int ch = kPageSize / rows;
  std::vector<BBox> out;
  for (std::size_t c : cells) {
    const int col = static_cast<int>(c) % cols;
    const int row = static_cast<int>(c) / cols;
    out.push_back({col * cw, row * ch, cw, ch});
  }
  return out;
}

BBox inset(BBox b, int dx, int dy) { return {b.x + dx, b.y + dy, b.w - 2 * dx, b.h - 2 * dy}; }

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> draw_distinct(Rng& rng, const std::vector<std::string>& pool, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i : sample_indices(rng, pool.size(), k)) out.push_back(pool[i]);
  shuffle(out, rng);
  return out;
}

std::string list_utterance(const std::string& verb, const std::vector<std::string>& items) {
  // "Select a, b and click Submit."
  return verb + " " + join(items, ", ") + " and click Submit.";
}

// ---------------------------------------------------------------------------
// Instance builders

Instance build_click_button(Rng& rng) {
  auto words = draw_distinct(rng, kButtonWords, 4);
  auto slots = grid_slots(rng, 4, 4, 4);
  std::vector<DomNode> kids;
  for (std::size_t i = 0; i < 4; ++i) {
    kids.push_back(make("button", inset(slots[i], 4, 12), "", "btn", words[i]));
  }
  Instance inst;
  inst.goal.words = {words[uniform_index(rng, 4)]};
  inst.utterance = "Click on the \"" + inst.goal.words[0] + "\" button.";
  inst.page = page_root(std::move(kids));
  return inst;
}

Instance build_checkboxes(Rng& rng, bool soft) {
  const std::size_t n_boxes = static_cast<std::size_t>(uniform_int(rng, 4, 6));
  const std::size_t n_targets = static_cast<std::size_t>(uniform_int(rng, 1, 3));
  std::vector<std::string> labels;
  std::vector<std::string> cues;
  if (soft) {
    const auto& groups = synonym_groups();
    std::vector<std::size_t> gs = sample_indices(rng, groups.size(), n_boxes);
    shuffle(gs, rng);
    for (std::size_t g : gs) {
      // The cue is the first word of the group; labels show another member.
      const auto& grp = groups[g];
      labels.push_back(grp[1 + uniform_index(rng, grp.size() - 1)]);
      cues.push_back(grp[0]);
    }
  } else {
    labels = draw_distinct(rng, kCheckboxWords, n_boxes);
    cues = labels;
  }
  std::vector<std::size_t> target_idx = sample_indices(rng, n_boxes, n_targets);
  shuffle(target_idx, rng);

  std::vector<DomNode> kids;
  const int row_h = 20;
  for (std::size_t i = 0; i < n_boxes; ++i) {
    const int y = 10 + static_cast<int>(i) * row_h;
    DomNode label = make("label", {10, y, 100, 16}, "", "checkbox-label", labels[i]);
    label.children.push_back(make("input", {12, y + 2, 12, 12}, "ch" + std::to_string(i), "checkbox"));
    kids.push_back(std::move(label));
  }
  kids.push_back(make("button", {10, 140, 50, 16}, "submit", "btn", "Submit"));

  Instance inst;
  std::vector<std::string> shown;
  for (std::size_t t : target_idx) {
    inst.goal.words.push_back(labels[t]);
    shown.push_back(cues[t]);
  }
  inst.utterance = list_utterance(soft ? "Select words similar to" : "Select", shown);
  inst.page = page_root(std::move(kids));
  return inst;
}

Instance build_choose_color(Rng& rng) {
  auto colors = draw_distinct(rng, kColors, 4);
  std::vector<DomNode> kids;
  for (std::size_t i = 0; i < 4; ++i) {
    kids.push_back(make("span", {10 + static_cast<int>(i) * 35, 40, 30, 30},
                        "swatch-" + std::to_string(i), "swatch " + colors[i]));
  }
  kids.push_back(make("button", {10, 120, 50, 16}, "submit", "btn", "Submit"));
  Instance inst;
  inst.goal.words = {colors[uniform_index(rng, 4)]};
  inst.utterance = "Select the color " + inst.goal.words[0] + " and click Submit.";
  inst.page = page_root(std::move(kids));
  return inst;
}

Instance build_enter_text(Rng& rng) {
  const std::string word = pick(kTypingWords, rng);
  const int y = 10 + 10 * uniform_int(rng, 0, 8);
  std::vector<DomNode> kids;
  kids.push_back(make("input", {10, y, 100, 16}, "text-input", "text"));
  kids.push_back(make("button", {10, y + 30, 50, 16}, "submit", "btn", "Submit"));
  Instance inst;
  inst.goal.words = {word};
  inst.utterance = "Enter \"" + word + "\" into the text field and press Submit.";
  inst.page = page_root(std::move(kids));
  return inst;
}

Instance build_use_spinner(Rng& rng) {
  int target = uniform_int(rng, -4, 4);
  if (target >= 0) target += 1;  // nonzero, in [-4, 5]
  std::vector<DomNode> kids;
  DomNode input = make("input", {10, 40, 60, 16}, "spinner", "spinner");
  input.value = "0";
  kids.push_back(std::move(input));
  kids.push_back(make("button", {75, 40, 40, 8}, "spinner-up", "spinner-button", "Increase"));
  kids.push_back(make("button", {75, 48, 40, 8}, "spinner-down", "spinner-button", "Decrease"));
  kids.push_back(make("button", {10, 120, 50, 16}, "submit", "btn", "Submit"));
  Instance inst;
  inst.goal.number = target;
  inst.utterance = "Set the spinner to " + std::to_string(target) + " and click Submit.";
  inst.page = page_root(std::move(kids));
  return inst;
}

std::string filler_sentence(Rng& rng, int n) {
  std::vector<std::string> w;
  for (int i = 0; i < n; ++i) w.push_back(pick(kFillerWords, rng));
  return join(w, " ");
}

Instance build_click_collapsible(Rng& rng) {
  const int y = 10 + 10 * uniform_int(rng, 0, 4);
  DomNode section = make("div", {5, y, 150, 80}, "collapsible", "collapsible");
  section.children.push_back(
      make("h3", {5, y, 150, 15}, "header", "header", "Section #" + std::to_string(uniform_int(rng, 1, 9))));
  section.children.push_back(make("div", {5, y + 15, 150, 0}, "content", "content"));
  std::vector<DomNode> kids;
  kids.push_back(std::move(section));
  kids.push_back(make("button", {10, 140, 50, 16}, "submit", "btn", "Submit"));
  Instance inst;
  inst.goal.words = {filler_sentence(rng, 5)};  // revealed when expanded
  inst.utterance = "Expand the section below and click submit.";
  inst.page = page_root(std::move(kids));
  return inst;
}

Instance build_book_flight(Rng& rng) {
  auto dep_opts = draw_distinct(rng, kCities, 6);
  const std::string departure = dep_opts[uniform_index(rng, dep_opts.size())];
  std::vector<std::string> rest;
  for (const auto& c : kCities) {
    if (c != departure) rest.push_back(c);
  }
  auto dest_opts = draw_distinct(rng, rest, 6);
  const std::string destination = dest_opts[uniform_index(rng, dest_opts.size())];
  const int day = uniform_int(rng, 1, kDayOptions);
  const int return_day = uniform_int(rng, day + 1, 28);
  const bool round_trip = uniform_index(rng, 2) == 0;
  const int passengers = uniform_int(rng, 1, 4);

  DomNode form = make("form", {0, 0, kPageSize, kPageSize}, "booking");
  auto add_field = [&](int row, const std::string& label, const std::string& id,
                       const std::vector<std::string>& options, int cols) {
    const int y = 5 + row * 52;
    DomNode group = make("div", {0, y, kPageSize, 50}, "", "field");
    group.children.push_back(make("label", {2, y + 2, 50, 16}, "", "field-label", label));
    DomNode select = make("select", {55, y + 1, 100, 48}, id, "dropdown");
    const int rows = (static_cast<int>(options.size()) + cols - 1) / cols;
    const int cw = 100 / cols;
    const int ch = 48 / rows;
    for (std::size_t i = 0; i < options.size(); ++i) {
      const int c = static_cast<int>(i) % cols;
      const int r = static_cast<int>(i) / cols;
      select.children.push_back(make("option", {55 + c * cw, y + 1 + r * ch, cw, ch}, "", "option", options[i]));
    }
    group.children.push_back(std::move(select));
    form.children.push_back(std::move(group));
  };
  std::vector<std::string> days;
  for (int d = 1; d <= kDayOptions; ++d) days.push_back(std::to_string(d));
  add_field(0, "Departure City", "departure-city", dep_opts, 2);
  add_field(1, "Destination City", "destination-city", dest_opts, 2);
  add_field(2, "Departure Day", "departure-day", days, 4);

  Instance inst;
  inst.goal.fields = {{"Departure City", departure},
                      {"Destination City", destination},
                      {"Departure Day", std::to_string(day)}};
  std::ostringstream u;
  u << "{\"Departure City\":\"" << departure << "\",\"Destination City\":\"" << destination
    << "\",\"Ticket Type\":\"" << (round_trip ? "Return flight" : "One-way")
    << "\",\"Departure Day\":" << day << ",\"Returning Day\":" << return_day
    << ",\"Passengers\":" << passengers << "}";
  inst.utterance = u.str();
  inst.page = page_root({});
  inst.page.children[0].children.push_back(std::move(form));
  return inst;
}

// ---------------------------------------------------------------------------
// Interaction helpers over a mutable page.

template <typename Pred>
void collect(DomNode& node, Pred&& pred, std::vector<DomNode*>& out) {
  if (pred(node)) out.push_back(&node);
  for (DomNode& c : node.children) collect(c, pred, out);
}

template <typename Pred>
void collect(const DomNode& node, Pred&& pred, std::vector<const DomNode*>& out) {
  if (pred(node)) out.push_back(&node);
  for (const DomNode& c : node.children) collect(c, pred, out);
}

DomNode* find_id(DomNode& root, const std::string& id) {
  std::vector<DomNode*> out;
  collect(root, [&](const DomNode& n) { return n.attr("id") == id; }, out);
  return out.empty() ? nullptr : out.front();
}

const DomNode* find_id(const DomNode& root, const std::string& id) {
  std::vector<const DomNode*> out;
  collect(root, [&](const DomNode& n) { return n.attr("id") == id; }, out);
  return out.empty() ? nullptr : out.front();
}

std::vector<const DomNode*> find_class(const DomNode& root, const std::string& cls) {
  std::vector<const DomNode*> out;
  collect(root, [&](const DomNode& n) { return n.attr("class") == cls; }, out);
  return out;
}

bool is_text_field(const DomNode& n) { return n.tag == "input" && n.attr("class") != "checkbox"; }

void focus_only(DomNode& root, const DomNode* target) {
  std::function<void(DomNode&)> walk = [&](DomNode& n) {
    n.flags.focused = (&n == target);
    for (DomNode& c : n.children) walk(c);
  };
  walk(root);
}

Outcome check_submit(const EnvState& s, const DomNode& page) {
  const std::string& task = s.task.name;
  if (task == "click-checkboxes" || task == "click-checkboxes-soft") {
    for (const DomNode* label : find_class(page, "checkbox-label")) {
      const bool want = std::find(s.goal.words.begin(), s.goal.words.end(), label->text) != s.goal.words.end();
      if (label->children.at(0).flags.checked != want) return Outcome::kFailure;
    }
    return Outcome::kSuccess;
  }
  if (task == "choose-color") {
    for (const DomNode* sw : find_class(page, "swatch " + s.goal.words[0])) {
      if (sw->flags.selected) return Outcome::kSuccess;
    }
    return Outcome::kFailure;
  }
  if (task == "enter-text") {
    const DomNode* input = find_id(page, "text-input");
    return input && input->value == s.goal.words[0] ? Outcome::kSuccess : Outcome::kFailure;
  }
  if (task == "use-spinner") {
    const DomNode* input = find_id(page, "spinner");
    return input && input->value == std::to_string(s.goal.number) ? Outcome::kSuccess : Outcome::kFailure;
  }
  if (task == "click-collapsible") {
    const DomNode* content = find_id(page, "content");
    return content && content->bbox.h > 0 ? Outcome::kSuccess : Outcome::kFailure;
  }
  return Outcome::kNone;
}

bool flight_complete(const EnvState& s, const DomNode& page) {
  static const std::map<std::string, std::string> ids = {
      {"Departure City", "departure-city"},
      {"Destination City", "destination-city"},
      {"Departure Day", "departure-day"}};
  for (const auto& [field, want] : s.goal.fields) {
    const DomNode* sel = find_id(page, ids.at(field));
    if (!sel || sel->value != want) return false;
  }
  return true;
}

}  // namespace

const std::vector<std::vector<std::string>>& synonym_groups() {
  static const std::vector<std::vector<std::string>> groups = [] {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(detail::kSynonymTable);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto words = split_whitespace(line);
      if (words.size() >= 2) out.push_back(std::move(words));
    }
    return out;
  }();
  return groups;
}

const std::vector<std::string>& task_registry() {
  static const std::vector<std::string> names = {
      "click-button", "click-checkboxes", "click-checkboxes-soft", "choose-color",
      "enter-text", "use-spinner", "click-collapsible", "book-flight-simplified"};
  return names;
}

bool is_registered_task(const std::string& name) {
  const auto& r = task_registry();
  return std::find(r.begin(), r.end(), name) != r.end();
}

std::vector<std::string> simulator_lexicon() {
  std::vector<std::string> texts = {
      "Click on the \"x\" button.", "Select and click Submit.", "Select words similar to",
      "Select the color", "Enter into the text field and press Submit.",
      "Set the spinner to and click Submit.", "Expand the section below and click submit.",
      "Section Increase Decrease Submit", "Departure City Destination City Ticket Type",
      "Return flight One-way Departure Day Returning Day Passengers"};
  for (const auto* pool : {&kButtonWords, &kTypingWords, &kCheckboxWords, &kColors, &kCities, &kFillerWords}) {
    texts.push_back(join(*pool, " "));
  }
  for (const auto& g : synonym_groups()) texts.push_back(join(g, " "));
  for (int i = -10; i <= 31; ++i) texts.push_back(std::to_string(i));
  std::vector<std::string> out;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) {
      if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(std::move(tok));
    }
  }
  return out;
}

namespace detail {

Instance build_instance(const std::string& task, Rng& rng) {
  if (task == "click-button") return build_click_button(rng);
  if (task == "click-checkboxes") return build_checkboxes(rng, false);
  if (task == "click-checkboxes-soft") return build_checkboxes(rng, true);
  if (task == "choose-color") return build_choose_color(rng);
  if (task == "enter-text") return build_enter_text(rng);
  if (task == "use-spinner") return build_use_spinner(rng);
  if (task == "click-collapsible") return build_click_collapsible(rng);
  if (task == "book-flight-simplified") return build_book_flight(rng);
  throw UnknownTaskError("unknown task '" + task + "'");
}

Outcome apply_action(const EnvState& s, DomNode& page, const NodePath& path, const Action& a) {
  DomNode& target = node_at(page, path);
  const std::string& task = s.task.name;
  if (!a.is_click()) {
    if (!is_text_field(target)) return Outcome::kNone;
    target.value = a.text;
    focus_only(page, &target);
    return Outcome::kNone;
  }

  if (target.tag == "input" && is_text_field(target)) {
    focus_only(page, &target);
    return Outcome::kNone;
  }
  if (task == "click-button") {
    if (target.tag != "button") return Outcome::kNone;
    return target.text == s.goal.words[0] ? Outcome::kSuccess : Outcome::kFailure;
  }
  if (target.attr("id") == "submit") return check_submit(s, page);

  if (task == "click-checkboxes" || task == "click-checkboxes-soft") {
    if (target.attr("class") == "checkbox") {
      target.flags.checked = !target.flags.checked;
    } else if (target.attr("class") == "checkbox-label") {
      target.children.at(0).flags.checked = !target.children.at(0).flags.checked;
    }
    return Outcome::kNone;
  }
  if (task == "choose-color") {
    if (target.attr("class").rfind("swatch ", 0) != 0) return Outcome::kNone;
    std::vector<DomNode*> swatches;
    collect(page, [](const DomNode& n) { return n.attr("class").rfind("swatch ", 0) == 0; }, swatches);
    for (DomNode* sw : swatches) sw->flags.selected = (sw == &target);
    return Outcome::kNone;
  }
  if (task == "use-spinner") {
    const std::string id = target.attr("id");
    if (id != "spinner-up" && id != "spinner-down") return Outcome::kNone;
    DomNode* input = find_id(page, "spinner");
    const int v = std::stoi(input->value) + (id == "spinner-up" ? 1 : -1);
    input->value = std::to_string(v);
    return Outcome::kNone;
  }
  if (task == "click-collapsible") {
    if (target.attr("id") != "header") return Outcome::kNone;
    DomNode* content = find_id(page, "content");
    const bool expanded = content->bbox.h > 0;
    content->bbox.h = expanded ? 0 : 60;
    content->text = expanded ? std::string() : s.goal.words[0];
    return Outcome::kNone;
  }
  if (task == "book-flight-simplified") {
    if (target.tag != "option" || path.empty()) return Outcome::kNone;
    NodePath parent_path(path.begin(), path.end() - 1);
    DomNode& select = node_at(page, parent_path);
    for (DomNode& opt : select.children) opt.flags.selected = (&opt == &target);
    select.value = target.text;
    return flight_complete(s, page) ? Outcome::kSuccess : Outcome::kNone;
  }
  return Outcome::kNone;
}

}  // namespace detail

std::vector<ScriptedAction> oracle_script(const EnvState& s) {
  std::vector<ScriptedAction> out;
  if (s.terminated) return out;
  const DomNode& page = s.snapshot.root();
  const std::string& task = s.task.name;
  auto ref_of_id = [&](const std::string& id) { return find_id(page, id)->ref; };

  if (task == "click-button") {
    for (const DomNode* b : find_class(page, "btn")) {
      if (b->text == s.goal.words[0]) out.push_back({Action::click(b->ref), 0});
    }
  } else if (task == "click-checkboxes" || task == "click-checkboxes-soft") {
    const auto labels = find_class(page, "checkbox-label");
    int phase = 0;
    for (const auto& word : s.goal.words) {
      for (const DomNode* label : labels) {
        if (label->text == word && !label->children.at(0).flags.checked) {
          out.push_back({Action::click(label->children.at(0).ref), phase});
        }
      }
      ++phase;
    }
    for (const DomNode* label : labels) {
      const bool want = std::find(s.goal.words.begin(), s.goal.words.end(), label->text) != s.goal.words.end();
      if (!want && label->children.at(0).flags.checked) {
        out.push_back({Action::click(label->children.at(0).ref), phase - 1});
      }
    }
    out.push_back({Action::click(ref_of_id("submit")), phase});
  } else if (task == "choose-color") {
    for (const DomNode* sw : find_class(page, "swatch " + s.goal.words[0])) {
      if (!sw->flags.selected) out.push_back({Action::click(sw->ref), 0});
    }
    out.push_back({Action::click(ref_of_id("submit")), 1});
  } else if (task == "enter-text") {
    const DomNode* input = find_id(page, "text-input");
    if (input->value != s.goal.words[0]) {
      out.push_back({Action::type_text(input->ref, s.goal.words[0]), 0});
    }
    out.push_back({Action::click(ref_of_id("submit")), 1});
  } else if (task == "use-spinner") {
    const int v = std::stoi(find_id(page, "spinner")->value);
    const int up = ref_of_id("spinner-up");
    const int down = ref_of_id("spinner-down");
    for (int i = v; i < s.goal.number; ++i) out.push_back({Action::click(up), 0});
    for (int i = v; i > s.goal.number; --i) out.push_back({Action::click(down), 0});
    out.push_back({Action::click(ref_of_id("submit")), 1});
  } else if (task == "click-collapsible") {
    if (find_id(page, "content")->bbox.h == 0) out.push_back({Action::click(ref_of_id("header")), 0});
    out.push_back({Action::click(ref_of_id("submit")), 1});
  } else if (task == "book-flight-simplified") {
    static const std::map<std::string, std::string> ids = {
        {"Departure City", "departure-city"},
        {"Destination City", "destination-city"},
        {"Departure Day", "departure-day"}};
    int phase = 0;
    for (const auto& [field, want] : s.goal.fields) {
      const DomNode* sel = find_id(page, ids.at(field));
      if (sel->value != want) {
        for (const DomNode& opt : sel->children) {
          if (opt.text == want) out.push_back({Action::click(opt.ref), phase});
        }
      }
      ++phase;
    }
  }
  return out;
}

}  // namespace webnav
