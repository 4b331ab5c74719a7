#pragma once

#include <vector>

#include "hotrod/types.hpp"

namespace hotrod {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;
};

// ARIMA(p,d,q) fit by conditional sum of squares. A constant (series mean
// after differencing) is included only when d == 0.
struct ArimaModel {
    ArimaOrder order;
    std::vector<double> ar;
    std::vector<double> ma;
    double mean = 0.0;
    double sigma2 = 0.0;
    double aic = 0.0;
};

// Fits one order by Hannan-Rissanen initialisation followed by Nelder-Mead
// refinement of the conditional sum of squares.
ArimaModel fit_arima(const std::vector<double>& series, const ArimaOrder& order,
                     int refine_evals = 300);

// Exhaustive order search within [0,max_p]x[0,max_d]x[0,max_q], minimum AIC.
// Ties break toward smaller p+d+q, then lexicographic (p,d,q).
ArimaModel fit_arima_auto(const std::vector<double>& series, int max_p, int max_d, int max_q);

// Forecasts `horizon` steps past the end of the series the model was fit on.
std::vector<double> forecast(const ArimaModel& model, const std::vector<double>& series,
                             int horizon);

}  // namespace hotrod
