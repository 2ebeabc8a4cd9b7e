#include "cloudlead/sim.hpp"

#include <cmath>

#include <json.hpp>

#include "cloudlead/errors.hpp"
#include "cloudlead/parallel.hpp"
#include "cloudlead/rng.hpp"

namespace cloudlead::sim {

using nlohmann::json;

void SimConfig::validate() const {
  if (sites.size() < 2) throw ConfigError("simulation needs at least 2 sites");
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw ConfigError("coverage must be in [0,1]");
  if (!(coverage_jitter >= 0.0 && coverage_jitter <= 1.0))
    throw ConfigError("coverage_jitter must be in [0,1]");
  if (!(coarse_mix >= 0.0 && coarse_mix < 1.0)) throw ConfigError("coarse_mix must be in [0,1)");
  if (!(puff_coverage >= 0.0 && puff_coverage <= 1.0))
    throw ConfigError("puff_coverage must be in [0,1]");
  if (!(puff_size_km > 0.0)) throw ConfigError("puff_size_km must be positive");
  if (!(depth >= 0.0 && depth < 1.0)) throw ConfigError("depth must be in [0,1)");
  if (!(corr_length_km > 0.0)) throw ConfigError("corr_length_km must be positive");
  if (!(corr_aspect >= 1.0)) throw ConfigError("corr_aspect must be >= 1");
  if (!(edge_softness > 0.0)) throw ConfigError("edge_softness must be positive");
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");
  if (decorrelation_per_h < 0.0) throw ConfigError("decorrelation_per_h must be >= 0");
  if (n_days < 1) throw ConfigError("n_days must be >= 1");
  if (step_minutes <= 0 || 1440 % step_minutes != 0)
    throw ConfigError("step_minutes must divide 1440");
  if (!(cloudy_day_prob >= 0.0 && cloudy_day_prob <= 1.0))
    throw ConfigError("cloudy_day_prob must be in [0,1]");
  if (!(cell_km > 0.0)) throw ConfigError("cell_km must be positive");
  if (!wind_kmh.allFinite()) throw ConfigError("wind components must be finite");
  for (const auto& s : sites)
    if (!std::isfinite(s.x_km) || !std::isfinite(s.y_km))
      throw ConfigError("non-finite coordinates for site '" + s.id + "'");
}

SimConfig SimConfig::desk_default() {
  SimConfig cfg;
  // Fixed jitter pattern, not seed-dependent: distinct transects per site.
  static const double jitter[16] = {-1.7, 0.9,  2.1,  -0.6, 1.3,  -2.2, 0.4,  -1.1,
                                    2.3,  -0.2, -1.9, 1.6,  -0.9, 1.1,  -2.4, 0.7};
  cfg.sites.clear();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      SiteMeta s;
      char id[8];
      std::snprintf(id, sizeof(id), "s%02d", r * 4 + c);
      s.id = id;
      s.x_km = 8.0 * c;
      s.y_km = 8.0 * r + jitter[r * 4 + c];
      s.capacity_kw = 1000.0;
      cfg.sites.push_back(s);
    }
  return cfg;
}

std::string to_json(const SimConfig& cfg) {
  json sites = json::array();
  for (const auto& s : cfg.sites) {
    json j{{"id", s.id}, {"x_km", s.x_km}, {"y_km", s.y_km}};
    if (s.capacity_kw) j["capacity_kw"] = *s.capacity_kw;
    sites.push_back(j);
  }
  json j{{"sites", sites},
         {"wind_kmh", {cfg.wind_kmh.x(), cfg.wind_kmh.y()}},
         {"corr_length_km", cfg.corr_length_km},
         {"corr_aspect", cfg.corr_aspect},
         {"coverage", cfg.coverage},
         {"coverage_jitter", cfg.coverage_jitter},
         {"coarse_mix", cfg.coarse_mix},
         {"puff_coverage", cfg.puff_coverage},
         {"puff_size_km", cfg.puff_size_km},
         {"depth", cfg.depth},
         {"edge_softness", cfg.edge_softness},
         {"noise_sd", cfg.noise_sd},
         {"decorrelation_per_h", cfg.decorrelation_per_h},
         {"n_days", cfg.n_days},
         {"step_minutes", cfg.step_minutes},
         {"cloudy_day_prob", cfg.cloudy_day_prob},
         {"seed", cfg.seed},
         {"start_date", format_date(cfg.start_date)},
         {"cell_km", cfg.cell_km}};
  return j.dump(2) + "\n";
}

SimConfig sim_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("simulation config: " + std::string(e.what()));
  }
  SimConfig cfg = SimConfig::desk_default();
  try {
    if (j.contains("sites")) {
      cfg.sites.clear();
      for (const auto& s : j["sites"]) {
        SiteMeta m;
        m.id = s.at("id").get<std::string>();
        m.x_km = s.at("x_km").get<double>();
        m.y_km = s.at("y_km").get<double>();
        if (s.contains("capacity_kw") && !s["capacity_kw"].is_null())
          m.capacity_kw = s["capacity_kw"].get<double>();
        cfg.sites.push_back(std::move(m));
      }
    }
    if (j.contains("wind_kmh")) {
      cfg.wind_kmh.x() = j["wind_kmh"].at(0).get<double>();
      cfg.wind_kmh.y() = j["wind_kmh"].at(1).get<double>();
    }
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    opt("corr_length_km", cfg.corr_length_km);
    opt("corr_aspect", cfg.corr_aspect);
    opt("coverage", cfg.coverage);
    opt("coverage_jitter", cfg.coverage_jitter);
    opt("coarse_mix", cfg.coarse_mix);
    opt("puff_coverage", cfg.puff_coverage);
    opt("puff_size_km", cfg.puff_size_km);
    opt("depth", cfg.depth);
    opt("edge_softness", cfg.edge_softness);
    opt("noise_sd", cfg.noise_sd);
    opt("decorrelation_per_h", cfg.decorrelation_per_h);
    opt("n_days", cfg.n_days);
    opt("step_minutes", cfg.step_minutes);
    opt("cloudy_day_prob", cfg.cloudy_day_prob);
    opt("seed", cfg.seed);
    opt("cell_km", cfg.cell_km);
    if (j.contains("start_date")) cfg.start_date = parse_date(j["start_date"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError("simulation config: " + std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

double GroundTruth::lead_hours(const SiteMeta& from, const SiteMeta& to) const {
  const double speed = wind_kmh.norm();
  if (speed <= 0.0) return 0.0;
  const Eigen::Vector2d d(to.x_km - from.x_km, to.y_km - from.y_km);
  return d.dot(wind_kmh) / (speed * speed);
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  json leads = json::object();
  for (const auto& from : gt.sites) {
    json row = json::object();
    for (const auto& to : gt.sites)
      if (from.id != to.id) row[to.id] = gt.lead_hours(from, to);
    leads[from.id] = row;
  }
  json j{{"wind_kmh", {gt.wind_kmh.x(), gt.wind_kmh.y()}}, {"lead_hours", leads}};
  return j.dump(2) + "\n";
}

Eigen::VectorXd clear_sky_profile(int steps_per_day) {
  if (steps_per_day < 4) throw ConfigError("clear-sky profile needs at least 4 steps");
  Eigen::VectorXd bell = Eigen::VectorXd::Zero(steps_per_day);
  const int sunrise = steps_per_day / 4;
  const int sunset = 3 * steps_per_day / 4;
  const double span = sunset - sunrise;
  for (int t = sunrise; t <= sunset && t < steps_per_day; ++t)
    bell[t] = 0.5 * (1.0 - std::cos(2.0 * M_PI * (t - sunrise) / span));
  return bell;
}

namespace {

// One day's frozen cloud field on a regular grid, sampled with bilinear
// interpolation in field coordinates (km). Cells are anisotropic: fine along
// the wind (sharp advected edges), coarse across it (elongated bands).
struct CloudField {
  double x0 = 0.0, y0 = 0.0, cell_x = 1.0, cell_y = 1.0;
  Eigen::ArrayXXd z;  // ny x nx, standardized

  double sample(double x, double y) const {
    const double fx = (x - x0) / cell_x;
    const double fy = (y - y0) / cell_y;
    const auto nx = z.cols(), ny = z.rows();
    const double cx = std::min(std::max(fx, 0.0), static_cast<double>(nx - 1));
    const double cy = std::min(std::max(fy, 0.0), static_cast<double>(ny - 1));
    const Eigen::Index ix = std::min<Eigen::Index>(static_cast<Eigen::Index>(cx), nx - 2);
    const Eigen::Index iy = std::min<Eigen::Index>(static_cast<Eigen::Index>(cy), ny - 2);
    const double tx = cx - ix, ty = cy - iy;
    return z(iy, ix) * (1 - tx) * (1 - ty) + z(iy, ix + 1) * tx * (1 - ty) +
           z(iy + 1, ix) * (1 - tx) * ty + z(iy + 1, ix + 1) * tx * ty;
  }
};

Eigen::VectorXd gaussian_kernel(double sigma_cells) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_cells)));
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma_cells * sigma_cells));
  return k / k.sum();
}

// Separable smoothing with kernels renormalized at the boundary.
void smooth_rows(Eigen::ArrayXXd& z, const Eigen::VectorXd& k) {
  const int radius = static_cast<int>(k.size() / 2);
  Eigen::ArrayXXd out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      double acc = 0.0, wsum = 0.0;
      const Eigen::Index lo = std::max<Eigen::Index>(0, c - radius);
      const Eigen::Index hi = std::min<Eigen::Index>(z.cols() - 1, c + radius);
      for (Eigen::Index i = lo; i <= hi; ++i) {
        const double w = k[i - c + radius];
        acc += w * z(r, i);
        wsum += w;
      }
      out(r, c) = acc / wsum;
    }
  z = out;
}

void smooth_cols(Eigen::ArrayXXd& z, const Eigen::VectorXd& k) {
  const int radius = static_cast<int>(k.size() / 2);
  Eigen::ArrayXXd out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      double acc = 0.0, wsum = 0.0;
      const Eigen::Index lo = std::max<Eigen::Index>(0, r - radius);
      const Eigen::Index hi = std::min<Eigen::Index>(z.rows() - 1, r + radius);
      for (Eigen::Index i = lo; i <= hi; ++i) {
        const double w = k[i - r + radius];
        acc += w * z(i, c);
        wsum += w;
      }
      out(r, c) = acc / wsum;
    }
  z = out;
}

void standardize(Eigen::ArrayXXd& z) {
  const double mean = z.mean();
  const double sd = std::sqrt((z - mean).square().mean());
  z = (z - mean) / (sd > 0.0 ? sd : 1.0);
}

// Two-scale anisotropic Gaussian field: a fine component sets the cloud edge
// statistics, a 4x coarser one modulates band placement so spacings do not
// come out quasi-periodic.
CloudField make_field(Rng& rng, double x0, double y0, double x1, double y1, double cell_x,
                      double cell_y, double sigma_x_km, double sigma_y_km,
                      double coarse_mix) {
  CloudField f;
  f.x0 = x0;
  f.y0 = y0;
  f.cell_x = cell_x;
  f.cell_y = cell_y;
  const auto nx = static_cast<Eigen::Index>(std::ceil((x1 - x0) / cell_x)) + 2;
  const auto ny = static_cast<Eigen::Index>(std::ceil((y1 - y0) / cell_y)) + 2;
  f.z.resize(ny, nx);
  for (Eigen::Index r = 0; r < ny; ++r)
    for (Eigen::Index c = 0; c < nx; ++c) f.z(r, c) = rng.normal();
  smooth_rows(f.z, gaussian_kernel(sigma_x_km / cell_x));
  smooth_cols(f.z, gaussian_kernel(sigma_y_km / cell_y));
  standardize(f.z);
  if (coarse_mix > 0.0) {
    Eigen::ArrayXXd coarse(ny, nx);
    for (Eigen::Index r = 0; r < ny; ++r)
      for (Eigen::Index c = 0; c < nx; ++c) coarse(r, c) = rng.normal();
    smooth_rows(coarse, gaussian_kernel(4.0 * sigma_x_km / cell_x));
    smooth_cols(coarse, gaussian_kernel(4.0 * sigma_y_km / cell_y));
    standardize(coarse);
    f.z = (1.0 - coarse_mix) * f.z + coarse_mix * coarse;
    standardize(f.z);
  }
  return f;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::pair<Dataset, GroundTruth> simulate(const SimConfig& cfg, int threads) {
  cfg.validate();
  const int M = 1440 / cfg.step_minutes;
  const int N = static_cast<int>(cfg.sites.size());
  const double dt_h = cfg.step_minutes / 60.0;

  // Field extent: the swept positions p - w*t for all sites over one day,
  // padded so kernel truncation never touches sampled cells.
  double min_x = cfg.sites[0].x_km, max_x = min_x;
  double min_y = cfg.sites[0].y_km, max_y = min_y;
  for (const auto& s : cfg.sites) {
    min_x = std::min(min_x, s.x_km);
    max_x = std::max(max_x, s.x_km);
    min_y = std::min(min_y, s.y_km);
    max_y = std::max(max_y, s.y_km);
  }
  const Eigen::Vector2d sweep = cfg.wind_kmh * 24.0;
  min_x += std::min(0.0, -sweep.x());
  max_x += std::max(0.0, -sweep.x());
  min_y += std::min(0.0, -sweep.y());
  max_y += std::max(0.0, -sweep.y());
  const double sigma_x = cfg.corr_length_km;
  const double sigma_y = cfg.corr_length_km * cfg.corr_aspect;
  const double cell_x = cfg.cell_km;
  const double cell_y = cfg.cell_km * cfg.corr_aspect;
  const double scale_up = cfg.coarse_mix > 0.0 ? 4.0 : 1.0;
  const double band_pad_x = 3.0 * scale_up * sigma_x + 2.0 * cell_x;
  const double band_pad_y = 3.0 * scale_up * sigma_y + 2.0 * cell_y;
  const double puff_cell = cfg.puff_size_km / 3.0;
  const double puff_pad = 3.0 * cfg.puff_size_km + 2.0 * puff_cell;
  const auto cells = [](double lo, double hi, double cell) {
    return static_cast<std::int64_t>((hi - lo) / cell) + 2;
  };
  const std::int64_t band_cells = cells(min_x - band_pad_x, max_x + band_pad_x, cell_x) *
                                  cells(min_y - band_pad_y, max_y + band_pad_y, cell_y);
  const std::int64_t puff_cells = cells(min_x - puff_pad, max_x + puff_pad, puff_cell) *
                                  cells(min_y - puff_pad, max_y + puff_pad, puff_cell);
  if (band_cells > cfg.max_field_cells || puff_cells > cfg.max_field_cells)
    throw ConfigError("site layout and wind sweep exceed the simulated field extent (" +
                      std::to_string(std::max(band_cells, puff_cells)) +
                      " cells; raise cell_km or shrink layout)");

  Dataset ds;
  ds.sites = cfg.sites;
  ds.start_date = cfg.start_date;
  ds.n_days = cfg.n_days;
  ds.step_minutes = cfg.step_minutes;
  ds.normalized = true;
  for (const auto& s : cfg.sites) ds.site_max[s.id] = 1.0;
  ds.values.resize(N, static_cast<Eigen::Index>(cfg.n_days) * M);

  const Eigen::VectorXd bell = clear_sky_profile(M);
  const Rng root(cfg.seed);

  parallel_for(cfg.n_days, threads, [&](std::int64_t day) {
    Rng day_rng = root.substream(static_cast<std::uint64_t>(day));
    const bool cloudy = day_rng.bernoulli(cfg.cloudy_day_prob) && cfg.coverage > 0.0;
    // Per-day cover draw: some days are thin scatter, some near-overcast.
    const double cover_today = std::min(
        0.98, std::max(0.02, cfg.coverage * day_rng.uniform(1.0 - cfg.coverage_jitter,
                                                            1.0 + cfg.coverage_jitter)));
    const double z_thresh = norm_quantile(cover_today);
    Eigen::MatrixXd block(N, M);

    if (!cloudy) {
      for (int i = 0; i < N; ++i) block.row(i) = bell.transpose();
    } else {
      const CloudField field_a =
          make_field(day_rng, min_x - band_pad_x, min_y - band_pad_y, max_x + band_pad_x,
                     max_y + band_pad_y, cell_x, cell_y, sigma_x, sigma_y, cfg.coarse_mix);
      // Second layer: small isotropic clouds. They ride the same wind, so
      // pairwise lead times stay exact, but a puff that hits one row can
      // miss the next; site-day cloudiness is no longer all-or-nothing.
      const bool puffy = cfg.puff_coverage > 0.0;
      CloudField puffs;
      double zp = 0.0;
      if (puffy) {
        puffs = make_field(day_rng, min_x - puff_pad, min_y - puff_pad, max_x + puff_pad,
                           max_y + puff_pad, puff_cell, puff_cell, cfg.puff_size_km,
                           cfg.puff_size_km, 0.0);
        zp = norm_quantile(std::min(
            0.98, std::max(0.02, cfg.puff_coverage *
                                     day_rng.uniform(1.0 - cfg.coverage_jitter,
                                                     1.0 + cfg.coverage_jitter))));
      }
      CloudField field_b;
      const bool evolving = cfg.decorrelation_per_h > 0.0;
      if (evolving)
        field_b =
            make_field(day_rng, min_x - band_pad_x, min_y - band_pad_y, max_x + band_pad_x,
                       max_y + band_pad_y, cell_x, cell_y, sigma_x, sigma_y, cfg.coarse_mix);
      for (int i = 0; i < N; ++i) {
        for (int t = 0; t < M; ++t) {
          const double hours = t * dt_h;
          const double px = cfg.sites[i].x_km - cfg.wind_kmh.x() * hours;
          const double py = cfg.sites[i].y_km - cfg.wind_kmh.y() * hours;
          double z = field_a.sample(px, py);
          if (evolving) {
            // Rotation between two frozen draws: stationary in time with
            // autocorrelation cos(rate * dt), so rate 0 recovers the oracle.
            const double th = cfg.decorrelation_per_h * hours;
            z = std::cos(th) * z + std::sin(th) * field_b.sample(px, py);
          }
          double tau =
              cfg.depth + (1.0 - cfg.depth) * logistic((z - z_thresh) / cfg.edge_softness);
          if (puffy)
            tau *= cfg.depth + (1.0 - cfg.depth) *
                                   logistic((puffs.sample(px, py) - zp) / cfg.edge_softness);
          block(i, t) = bell[t] * tau;
        }
      }
    }

    if (cfg.noise_sd > 0.0) {
      Rng noise_rng = day_rng.substream(0xB0153ULL);
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < M; ++t)
          block(i, t) += cfg.noise_sd * noise_rng.normal();
    }
    block = block.cwiseMax(0.0).cwiseMin(1.0);
    ds.values.middleCols(static_cast<Eigen::Index>(day) * M, M) = block;
  });

  GroundTruth gt{cfg.sites, cfg.wind_kmh};
  return {std::move(ds), std::move(gt)};
}

}  // namespace cloudlead::sim
