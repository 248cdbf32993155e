#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

namespace oracle {

namespace {

std::string clean(const std::string& s) {
  std::string out;
  for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto a = out.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = out.find_last_not_of(" \t\r\n");
  return out.substr(a, b - a + 1);
}

}  // namespace

Adjacency normalize(const std::vector<graph::AssociationRow>& rows) {
  std::map<std::string, std::map<std::string, double>> counts;
  for (const auto& r : rows) counts[clean(r.cue)][clean(r.response)] += static_cast<double>(r.count);
  Adjacency out;
  for (const auto& [cue, responses] : counts) {
    double total = 0;
    for (const auto& [w, c] : responses) total += c;
    for (const auto& [w, c] : responses) out[cue][w] = c / total;
  }
  return out;
}

std::map<std::string, Reach> two_hop(const Adjacency& adjacency, const std::string& origin) {
  std::map<std::string, Reach> out;
  std::set<std::string> vocabulary;
  for (const auto& [cue, responses] : adjacency) {
    vocabulary.insert(cue);
    for (const auto& [w, s] : responses) vocabulary.insert(w);
  }
  if (!vocabulary.count(origin)) return out;

  const auto next = [&](const std::string& w) -> const std::map<std::string, double>* {
    auto it = adjacency.find(w);
    return it == adjacency.end() ? nullptr : &it->second;
  };

  // Hop counts by plain BFS.
  std::map<std::string, int> hop{{origin, 0}};
  std::deque<std::string> queue{origin};
  while (!queue.empty()) {
    const auto w = queue.front();
    queue.pop_front();
    if (hop[w] == 2) continue;
    if (const auto* edges = next(w)) {
      for (const auto& [v, s] : *edges) {
        if (!hop.count(v)) {
          hop[v] = hop[w] + 1;
          queue.push_back(v);
        }
      }
    }
  }

  // Strength: best product over every walk of length 0, 1 or 2.
  std::map<std::string, double> best{{origin, 1.0}};
  const auto consider = [&best](const std::string& w, double s) {
    auto it = best.find(w);
    if (it == best.end() || s > it->second) best[w] = s;
  };
  if (const auto* first = next(origin)) {
    for (const auto& [a, sa] : *first) {
      consider(a, sa);
      if (const auto* second = next(a)) {
        for (const auto& [b, sb] : *second) consider(b, sa * sb);
      }
    }
  }
  for (const auto& [w, h] : hop) out[w] = {h, best.at(w)};
  return out;
}

double delta_e(image::Rgb a, image::Rgb b) {
  const auto lab = [](image::Rgb c) {
    std::array<double, 3> lin{};
    const std::array<double, 3> raw{c.r / 255.0, c.g / 255.0, c.b / 255.0};
    for (int i = 0; i < 3; ++i) {
      lin[i] = raw[i] > 0.04045 ? std::pow((raw[i] + 0.055) / 1.055, 2.4) : raw[i] / 12.92;
    }
    const double m[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                            {0.2126729, 0.7151522, 0.0721750},
                            {0.0193339, 0.1191920, 0.9503041}};
    const double white[3] = {0.95047, 1.0, 1.08883};
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i) {
      const double t = (m[i][0] * lin[0] + m[i][1] * lin[1] + m[i][2] * lin[2]) / white[i];
      const double delta = 6.0 / 29.0;
      f[i] = t > delta * delta * delta ? std::pow(t, 1.0 / 3.0) : t / (3 * delta * delta) + 4.0 / 29.0;
    }
    return std::array<double, 3>{116 * f[1] - 16, 500 * (f[0] - f[1]), 200 * (f[1] - f[2])};
  };
  if (a == b) return 0.0;
  const auto x = lab(a);
  const auto y = lab(b);
  return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2]));
}

std::set<std::string> concept_ids(const corpus::CorpusIndex& index, const Adjacency& adjacency,
                                  const std::vector<std::string>& keywords) {
  std::set<std::string> neighbourhood;
  for (const auto& k : keywords) {
    const auto reach = two_hop(adjacency, k);
    if (reach.empty()) neighbourhood.insert(k);
    for (const auto& [w, r] : reach) neighbourhood.insert(w);
  }
  std::set<std::string> ids;
  for (const auto& [id, record] : index.records()) {
    for (const auto& k : record.keywords) {
      if (neighbourhood.count(k)) ids.insert(id);
    }
  }
  return ids;
}

std::vector<std::string> color_ranking(const corpus::CorpusIndex& index, const Adjacency& adjacency,
                                       const std::string& seed, std::size_t k) {
  const auto& s = index.at(seed);
  std::vector<std::pair<double, std::string>> all;
  for (const auto& id : concept_ids(index, adjacency, s.keywords)) {
    if (id != seed) all.emplace_back(delta_e(index.at(id).dominant, s.dominant), id);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::string> object_ranking(const corpus::CorpusIndex& index, const Adjacency& adjacency,
                                        const std::string& seed, std::size_t k) {
  const auto& s = index.at(seed);
  std::vector<std::tuple<long, double, std::string>> all;
  for (const auto& id : concept_ids(index, adjacency, s.keywords)) {
    if (id == seed) continue;
    long shared = 0;
    for (const auto& tag : s.objects) {
      const auto& theirs = index.at(id).objects;
      shared += std::count(theirs.begin(), theirs.end(), tag) > 0;
    }
    if (shared > 0) all.emplace_back(-shared, delta_e(index.at(id).dominant, s.dominant), id);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) out.push_back(std::get<2>(all[i]));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Pixel = std::array<int, 3>;

struct Box {
  Pixel lo, hi;
};

bool inside(const Pixel& p, const Box& b) {
  for (int c = 0; c < 3; ++c) {
    if (p[c] < b.lo[c] || p[c] > b.hi[c]) return false;
  }
  return true;
}

long population(const std::vector<Pixel>& pixels, const Box& b) {
  return std::count_if(pixels.begin(), pixels.end(), [&](const Pixel& p) { return inside(p, b); });
}

long volume(const Box& b) { return long(b.hi[0] - b.lo[0] + 1) * (b.hi[1] - b.lo[1] + 1) * (b.hi[2] - b.lo[2] + 1); }

struct Entry {
  Box box;
  long sequence;
};

// Highest key first; equal keys go to the most recently inserted entry.
template <typename Key>
Box take(std::vector<Entry>& queue, Key key) {
  auto best = queue.begin();
  for (auto it = queue.begin(); it != queue.end(); ++it) {
    const auto k = key(it->box), kb = key(best->box);
    if (k > kb || (k == kb && it->sequence > best->sequence)) best = it;
  }
  const Box out = best->box;
  queue.erase(best);
  return out;
}

std::vector<Box> cut(const std::vector<Pixel>& pixels, const Box& box) {
  const long total = population(pixels, box);
  if (total == 0) return {};
  if (total == 1) return {box};
  int axis = 0;
  int widest = -1;
  for (int c = 0; c < 3; ++c) {
    if (box.hi[c] - box.lo[c] + 1 > widest) {
      widest = box.hi[c] - box.lo[c] + 1;
      axis = c;
    }
  }
  // Population of the slab lo..i along the axis; zero outside the box.
  const auto upto = [&](int i) -> long {
    if (i < box.lo[axis] || i > box.hi[axis]) return 0;
    Box slab = box;
    slab.hi[axis] = i;
    return population(pixels, slab);
  };
  const auto beyond = [&](int i) -> long {
    if (i < box.lo[axis] || i > box.hi[axis]) return 0;
    return total - upto(i);
  };
  for (int i = box.lo[axis]; i <= box.hi[axis]; ++i) {
    if (!(upto(i) > total / 2.0)) continue;
    const int left = i - box.lo[axis];
    const int right = box.hi[axis] - i;
    int d = left <= right ? std::min(box.hi[axis] - 1, static_cast<int>(std::floor(i + right / 2.0)))
                          : std::max(box.lo[axis], static_cast<int>(std::trunc(i - 1 - left / 2.0)));
    while (upto(d) == 0) ++d;
    long rest = beyond(d);
    while (rest == 0 && upto(d - 1) != 0) rest = beyond(--d);
    Box a = box, b = box;
    a.hi[axis] = d;
    b.lo[axis] = d + 1;
    return {a, b};
  }
  return {};
}

template <typename Key>
void grow(const std::vector<Pixel>& pixels, std::vector<Entry>& queue, long& sequence, double target, Key key) {
  double colors = static_cast<double>(queue.size());
  int iterations = 0;
  while (iterations < 1000) {
    if (colors >= target) return;
    if (iterations++ > 1000) return;
    const Box box = take(queue, key);
    if (population(pixels, box) == 0) {
      queue.push_back({box, sequence++});
      ++iterations;
      continue;
    }
    const auto parts = cut(pixels, box);
    if (parts.empty()) return;
    queue.push_back({parts[0], sequence++});
    if (parts.size() == 2) {
      queue.push_back({parts[1], sequence++});
      colors += 1;
    }
  }
}

}  // namespace

color::Palette median_cut(const image::Raster& raster, int palette_size) {
  std::vector<Pixel> pixels;
  Box all{{31, 31, 31}, {0, 0, 0}};
  for (std::uint32_t y = 0; y < raster.height; ++y) {
    for (std::uint32_t x = 0; x < raster.width; ++x) {
      const auto c = raster.at(x, y);
      const Pixel p{c.r / 8, c.g / 8, c.b / 8};
      pixels.push_back(p);
      for (int i = 0; i < 3; ++i) {
        all.lo[i] = std::min(all.lo[i], p[i]);
        all.hi[i] = std::max(all.hi[i], p[i]);
      }
    }
  }
  long sequence = 0;
  std::vector<Entry> queue{{all, sequence++}};
  const auto by_population = [&](const Box& b) { return population(pixels, b); };
  grow(pixels, queue, sequence, 0.75 * palette_size, by_population);

  std::vector<Entry> second;
  while (!queue.empty()) second.push_back({take(queue, by_population), sequence++});
  const auto by_weighted = [&](const Box& b) { return population(pixels, b) * volume(b); };
  grow(pixels, second, sequence, double(palette_size) - double(second.size()), by_weighted);

  color::Palette out;
  for (const auto& e : second) {
    long n = 0;
    double sums[3] = {0, 0, 0};
    for (const auto& p : pixels) {
      if (!inside(p, e.box)) continue;
      ++n;
      for (int c = 0; c < 3; ++c) sums[c] += (p[c] + 0.5) * 8;
    }
    if (n == 0) continue;
    out.push_back({{static_cast<std::uint8_t>(sums[0] / n), static_cast<std::uint8_t>(sums[1] / n),
                    static_cast<std::uint8_t>(sums[2] / n)},
                   static_cast<std::uint32_t>(n)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.population != b.population) return a.population > b.population;
    return a.color < b.color;
  });
  if (out.size() > static_cast<std::size_t>(palette_size)) out.resize(palette_size);
  return out;
}

}  // namespace oracle
