#include "rgbt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rgbt/errors.hpp"

namespace rgbt {

namespace fs = std::filesystem;

std::string_view subset_name(Subset s) {
  switch (s) {
    case Subset::kShortTerm:
      return "short-term";
    case Subset::kLongTerm:
      return "long-term";
    case Subset::kMaskAnnotated:
      return "mask-annotated";
  }
  return "unknown";
}

std::optional<Subset> subset_from_name(std::string_view name) {
  if (name == "short-term") return Subset::kShortTerm;
  if (name == "long-term") return Subset::kLongTerm;
  if (name == "mask-annotated") return Subset::kMaskAnnotated;
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Homography
// --------------------------------------------------------------------------

Homography Homography::translation(double tx, double ty) {
  Homography h;
  h.m = {1, 0, tx, 0, 1, ty, 0, 0, 1};
  return h;
}

Homography Homography::from_values(const std::array<double, 9>& values) {
  const double w = values[8];
  if (std::abs(w) <= 1e-12) {
    throw GeometryError("homography bottom-right entry must be nonzero");
  }
  Homography h;
  for (int i = 0; i < 9; ++i) h.m[i] = values[i] / w;
  if (std::abs(h.det()) <= 1e-9) {
    throw GeometryError("homography is singular (|det| <= 1e-9)");
  }
  return h;
}

double Homography::det() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
  const double d = det();
  if (std::abs(d) <= 1e-9) throw GeometryError("homography is singular, cannot invert");
  std::array<double, 9> adj = {
      m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
      m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
      m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
  for (double& v : adj) v /= d;
  return from_values(adj);
}

std::array<double, 2> Homography::map_point(double x, double y) const {
  const double u = m[0] * x + m[1] * y + m[2];
  const double v = m[3] * x + m[4] * y + m[5];
  const double w = m[6] * x + m[7] * y + m[8];
  if (std::abs(w) <= 1e-12) {
    throw GeometryError("homography maps point to infinity");
  }
  return {u / w, v / w};
}

BoundingBox apply_alignment(const BoundingBox& box, const Homography& h) {
  if (box.is_empty()) return BoundingBox::empty_box();
  const std::array<std::array<double, 2>, 4> corners = {{{box.x, box.y},
                                                         {box.x + box.w, box.y},
                                                         {box.x + box.w, box.y + box.h},
                                                         {box.x, box.y + box.h}}};
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  bool first = true;
  for (const auto& c : corners) {
    const auto p = h.map_point(c[0], c[1]);
    if (first) {
      min_x = max_x = p[0];
      min_y = max_y = p[1];
      first = false;
    } else {
      min_x = std::min(min_x, p[0]);
      max_x = std::max(max_x, p[0]);
      min_y = std::min(min_y, p[1]);
      max_y = std::max(max_y, p[1]);
    }
  }
  return {min_x, min_y, max_x - min_x, max_y - min_y};
}

// --------------------------------------------------------------------------
// SequenceRecord
// --------------------------------------------------------------------------

int SequenceRecord::annotated_count() const {
  if (frame_count <= 0 || interval <= 0) return 0;
  return (frame_count + interval - 1) / interval;
}

std::vector<int> SequenceRecord::annotated_indices() const {
  std::vector<int> idx;
  for (int f = 0; f < frame_count; f += interval) idx.push_back(f);
  return idx;
}

int SequenceRecord::max_absence_span() const {
  const std::vector<int> idx = annotated_indices();
  int best = 0;
  int run_start = -1;
  for (std::size_t i = 0; i < gt_visible.size(); ++i) {
    const bool absent = !gt_visible[i].has_value() && !gt_thermal[i].has_value();
    if (absent) {
      if (run_start < 0) run_start = idx[i];
      best = std::max(best, idx[i] - run_start + 1);
    } else {
      run_start = -1;
    }
  }
  return best;
}

AttributeSet SequenceRecord::effective_sequence_attributes() const {
  AttributeSet s = frame_attributes.united();
  if (sequence_attributes) s |= *sequence_attributes;
  return s;
}

void SequenceRecord::validate() const {
  if (name.empty()) throw ProtocolError("sequence has no name");
  if (frame_count <= 0) throw ProtocolError(name + ": frame count must be positive");
  if (interval <= 0) throw ProtocolError(name + ": annotation interval must be positive");
  const int n = annotated_count();
  auto check_track = [&](const BoxTrack& t, const char* which) {
    if (static_cast<int>(t.size()) != n) {
      throw ProtocolError(name + ": " + which + " has " + std::to_string(t.size()) +
                          " entries, expected " + std::to_string(n) +
                          " (annotation interval violation)");
    }
    for (const auto& b : t) {
      if (b && (b->w < 0.0 || b->h < 0.0)) {
        throw ProtocolError(name + ": negative box extent in " + which);
      }
    }
  };
  check_track(gt_visible, "gt_rgb");
  check_track(gt_thermal, "gt_ir");
  if (static_cast<int>(frame_attributes.frames.size()) != n) {
    throw ProtocolError(name + ": attribute track has " +
                        std::to_string(frame_attributes.frames.size()) + " entries, expected " +
                        std::to_string(n));
  }
  const bool lt = qualifies_long_term();
  if (lt && subset != Subset::kLongTerm) {
    throw ProtocolError(name + ": target absent for more than " +
                        std::to_string(kLongTermAbsenceFrames) +
                        " continuous frames requires the long-term subset tag");
  }
  if (!lt && subset == Subset::kLongTerm) {
    throw ProtocolError(name + ": long-term tag requires an absence span over " +
                        std::to_string(kLongTermAbsenceFrames) + " frames");
  }
  for (const auto& [frame, mask] : masks) {
    if (frame < 0 || frame >= frame_count || frame % interval != 0) {
      throw ProtocolError(name + ": mask frame " + std::to_string(frame) +
                          " is not an annotated frame");
    }
    if (mask.width <= 0 || mask.height <= 0 ||
        mask.bits.size() != static_cast<std::size_t>(mask.width) * mask.height) {
      throw ProtocolError(name + ": malformed mask at frame " + std::to_string(frame));
    }
  }
  if (std::abs(alignment.det()) <= 1e-9) {
    throw ProtocolError(name + ": alignment homography is singular");
  }
}

bool operator==(const SequenceRecord& a, const SequenceRecord& b) {
  return a.name == b.name && a.subset == b.subset && a.frame_count == b.frame_count &&
         a.interval == b.interval && a.alignment == b.alignment && a.gt_visible == b.gt_visible &&
         a.gt_thermal == b.gt_thermal && a.frame_attributes == b.frame_attributes &&
         a.sequence_attributes == b.sequence_attributes && a.masks == b.masks;
}

// --------------------------------------------------------------------------
// Parsing helpers
// --------------------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const fs::path& file, int line, const std::string& what) {
  throw ParseError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const fs::path& file, int line, const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) parse_fail(file, line, "trailing characters in number '" + tok + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    parse_fail(file, line, "expected a number, got '" + tok + "'");
  }
}

BoxTrack read_box_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ProtocolError("missing annotation file " + file.string());
  BoxTrack track;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty()) continue;
    const std::vector<std::string> parts = split(s, ',');
    if (parts.size() != 4) {
      parse_fail(file, lineno, "expected 4 comma-separated fields, got " +
                                   std::to_string(parts.size()));
    }
    int nan_count = 0;
    for (const auto& p : parts) {
      if (strip(p) == "nan") ++nan_count;
    }
    if (nan_count == 4) {
      track.push_back(std::nullopt);
      continue;
    }
    if (nan_count != 0) parse_fail(file, lineno, "mixed nan and numeric fields");
    BoundingBox b;
    b.x = parse_double(file, lineno, strip(parts[0]));
    b.y = parse_double(file, lineno, strip(parts[1]));
    b.w = parse_double(file, lineno, strip(parts[2]));
    b.h = parse_double(file, lineno, strip(parts[3]));
    track.push_back(b);
  }
  return track;
}

void write_box_file(const fs::path& file, const BoxTrack& track) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out.precision(17);
  for (const auto& b : track) {
    if (b) {
      out << b->x << ',' << b->y << ',' << b->w << ',' << b->h << '\n';
    } else {
      out << "nan,nan,nan,nan\n";
    }
  }
}

AttributeSet parse_attr_line(const fs::path& file, int lineno, const std::string& s) {
  std::istringstream is(s);
  AttributeSet set;
  int v = 0;
  int count = 0;
  while (is >> v) {
    if (v != 0 && v != 1) parse_fail(file, lineno, "attribute flags must be 0 or 1");
    if (count < kAttributeCount) set.flags[count] = v == 1;
    ++count;
  }
  if (count != kAttributeCount) {
    parse_fail(file, lineno,
               "expected " + std::to_string(kAttributeCount) + " flags, got " +
                   std::to_string(count));
  }
  return set;
}

void write_attr_line(std::ostream& os, const AttributeSet& set) {
  for (int i = 0; i < kAttributeCount; ++i) {
    if (i) os << ' ';
    os << (set.flags[i] ? 1 : 0);
  }
  os << '\n';
}

}  // namespace

std::string frame_stem(int frame_index) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%06d", frame_index);
  return buf;
}

SequenceRecord parse_sequence(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  std::ifstream in(manifest);
  if (!in) throw ProtocolError("missing manifest " + manifest.string());

  SequenceRecord rec;
  bool have_name = false, have_subset = false, have_frames = false, have_interval = false,
       have_homography = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    std::istringstream ls(s);
    std::string key;
    ls >> key;
    if (key == "name") {
      ls >> rec.name;
      have_name = !rec.name.empty();
    } else if (key == "subset") {
      std::string v;
      ls >> v;
      const auto sub = subset_from_name(v);
      if (!sub) parse_fail(manifest, lineno, "unknown subset '" + v + "'");
      rec.subset = *sub;
      have_subset = true;
    } else if (key == "frames") {
      if (!(ls >> rec.frame_count)) parse_fail(manifest, lineno, "frames wants an integer");
      have_frames = true;
    } else if (key == "interval") {
      if (!(ls >> rec.interval)) parse_fail(manifest, lineno, "interval wants an integer");
      have_interval = true;
    } else if (key == "homography") {
      std::array<double, 9> h{};
      for (int i = 0; i < 9; ++i) {
        std::string tok;
        if (!(ls >> tok)) parse_fail(manifest, lineno, "homography wants 9 numbers");
        h[i] = parse_double(manifest, lineno, tok);
      }
      try {
        rec.alignment = Homography::from_values(h);
      } catch (const GeometryError& e) {
        parse_fail(manifest, lineno, e.what());
      }
      have_homography = true;
    } else {
      parse_fail(manifest, lineno, "unknown manifest key '" + key + "'");
    }
  }
  if (!have_name || !have_subset || !have_frames || !have_interval || !have_homography) {
    throw ParseError(manifest.string() + ": manifest must define name, subset, frames, interval "
                                         "and homography");
  }

  rec.gt_visible = read_box_file(dir / "gt_rgb.txt");
  rec.gt_thermal = read_box_file(dir / "gt_ir.txt");

  const fs::path attr_file = dir / "attr_frame.txt";
  std::ifstream attrs(attr_file);
  if (!attrs) throw ProtocolError("missing annotation file " + attr_file.string());
  lineno = 0;
  while (std::getline(attrs, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty()) continue;
    rec.frame_attributes.frames.push_back(parse_attr_line(attr_file, lineno, s));
  }

  const fs::path seq_attr_file = dir / "attr_seq.txt";
  if (fs::exists(seq_attr_file)) {
    std::ifstream sa(seq_attr_file);
    std::string s;
    std::getline(sa, s);
    rec.sequence_attributes = parse_attr_line(seq_attr_file, 1, strip(s));
  }

  const fs::path mask_dir = dir / "masks";
  if (fs::exists(mask_dir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(mask_dir)) {
      if (e.path().extension() == ".rle") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      int frame = 0;
      try {
        frame = std::stoi(f.stem().string());
      } catch (const std::exception&) {
        throw ParseError(f.string() + ": mask file name must be a frame index");
      }
      rec.masks[frame] = read_mask_file(f);
    }
  }

  rec.validate();
  return rec;
}

void write_sequence(const fs::path& dir, const SequenceRecord& rec) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.txt");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out.precision(17);
    out << "name " << rec.name << '\n';
    out << "subset " << subset_name(rec.subset) << '\n';
    out << "frames " << rec.frame_count << '\n';
    out << "interval " << rec.interval << '\n';
    out << "homography";
    for (double v : rec.alignment.m) out << ' ' << v;
    out << '\n';
  }
  write_box_file(dir / "gt_rgb.txt", rec.gt_visible);
  write_box_file(dir / "gt_ir.txt", rec.gt_thermal);
  {
    std::ofstream out(dir / "attr_frame.txt");
    for (const AttributeSet& s : rec.frame_attributes.frames) write_attr_line(out, s);
  }
  if (rec.sequence_attributes) {
    std::ofstream out(dir / "attr_seq.txt");
    write_attr_line(out, *rec.sequence_attributes);
  }
  if (!rec.masks.empty()) {
    fs::create_directories(dir / "masks");
    for (const auto& [frame, mask] : rec.masks) {
      write_mask_file(dir / "masks" / (frame_stem(frame) + ".rle"), mask);
    }
  }
}

std::vector<fs::path> list_sequence_dirs(const fs::path& root) {
  if (!fs::exists(root)) throw IoError("dataset root " + root.string() + " does not exist");
  if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.txt")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

AlignmentStats alignment_stats(std::span<const SequenceRecord> records) {
  std::vector<double> distances;
  for (const SequenceRecord& rec : records) {
    for (std::size_t i = 0; i < rec.gt_visible.size(); ++i) {
      if (rec.gt_visible[i] && rec.gt_thermal[i]) {
        distances.push_back(center_distance(*rec.gt_visible[i], *rec.gt_thermal[i]));
      }
    }
  }
  if (distances.empty()) {
    throw ProtocolError("alignment_stats: no frames with both modality annotations");
  }
  AlignmentStats st;
  st.samples = static_cast<int>(distances.size());
  double s = 0.0;
  for (double d : distances) s += d;
  st.mean = s / static_cast<double>(distances.size());
  std::sort(distances.begin(), distances.end());
  const std::size_t n = distances.size();
  st.median = n % 2 == 1 ? distances[n / 2] : 0.5 * (distances[n / 2 - 1] + distances[n / 2]);
  return st;
}

// --------------------------------------------------------------------------
// Masks and tensors on disk
// --------------------------------------------------------------------------

void write_mask(std::ostream& os, const FrameMask& mask) {
  const bool start = !mask.bits.empty() && mask.bits[0] != 0;
  os << mask.width << ' ' << mask.height << ' ' << (start ? 1 : 0) << '\n';
  std::vector<std::int64_t> runs;
  std::int64_t run = 0;
  bool value = start;
  for (std::uint8_t b : mask.bits) {
    const bool v = b != 0;
    if (v == value) {
      ++run;
    } else {
      runs.push_back(run);
      value = v;
      run = 1;
    }
  }
  runs.push_back(run);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i) os << ' ';
    os << runs[i];
  }
  os << '\n';
}

FrameMask read_mask(std::istream& is) {
  int width = 0, height = 0, start = 0;
  if (!(is >> width >> height >> start) || width <= 0 || height <= 0 ||
      (start != 0 && start != 1)) {
    throw ParseError("mask header must be 'width height start_value'");
  }
  FrameMask mask(width, height);
  std::int64_t total = static_cast<std::int64_t>(width) * height;
  std::int64_t pos = 0;
  bool value = start == 1;
  std::int64_t run = 0;
  while (pos < total && is >> run) {
    if (run < 0 || pos + run > total) {
      throw ParseError("mask run lengths must sum to width*height");
    }
    if (value) {
      for (std::int64_t i = 0; i < run; ++i) mask.bits[static_cast<std::size_t>(pos + i)] = 1;
    }
    pos += run;
    value = !value;
  }
  if (pos != total) throw ParseError("mask run lengths must sum to width*height");
  return mask;
}

void write_mask_file(const fs::path& path, const FrameMask& mask) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_mask(out, mask);
}

FrameMask read_mask_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return read_mask(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_tensor_file(const fs::path& path, const Tensor& t, int precision) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  t.write_text(out, precision);
}

Tensor read_tensor_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Tensor::read_text(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace rgbt
