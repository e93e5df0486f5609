#pragma once

// Densities from JSON: a named preset or an explicit [r, f] table.
//
//   {"preset": "uniform"}            ball: n!/pi^n, P^n: f = 1
//   {"preset": "power:2"}            ball: (2n + a)/sigma * |z|^a (probability)
//   {"preset": "annulus:0.3,0.7"}    indicator of a <= |z| <= b, unit mass (ball) or mass V (P^n)
//   {"preset": "exp:0.1"}            P^n: f = e^c
//   {"table": [[r, f], ...]}         linear in r, constant beyond the ends
//
// Every form accepts "p" (default 2). Errors name the offending JSON path.

#include <string>

#include <json.hpp>

#include "mamf/radial_core.hpp"

namespace mamf {

RadialDensity density_from_preset(const std::string& preset, const GridPtr& grid, int n,
                                  double p = 2.0);

RadialDensity density_from_json(const nlohmann::json& spec, const GridPtr& grid, int n,
                                const std::string& path = "/density");

}  // namespace mamf
