#pragma once

namespace uvbody::raster {

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

/// Orientation-agnostic containment; boundary points count as inside. The
/// test is sign-symmetric: reflecting every coordinate negates each edge
/// value exactly, so mirrored triangles accept exactly mirrored points.
inline bool point_in_triangle(const double* tx, const double* ty, double px, double py) {
    double e0 = edge(tx[0], ty[0], tx[1], ty[1], px, py);
    double e1 = edge(tx[1], ty[1], tx[2], ty[2], px, py);
    double e2 = edge(tx[2], ty[2], tx[0], ty[0], px, py);
    return (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0);
}

inline double signed_area2(const double* tx, const double* ty) {
    return edge(tx[0], ty[0], tx[1], ty[1], tx[2], ty[2]);
}

/// Barycentric weights of (px, py); tiny negative weights from rounding on
/// boundary points are clamped and renormalized.
inline void barycentric(const double* tx, const double* ty, double px, double py, double* w) {
    double area = signed_area2(tx, ty);
    double wb = edge(tx[0], ty[0], px, py, tx[2], ty[2]) / area;
    double wc = edge(tx[0], ty[0], tx[1], ty[1], px, py) / area;
    w[0] = 1.0 - wb - wc;
    w[1] = wb;
    w[2] = wc;
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (w[i] < 0.0) w[i] = 0.0;
        sum += w[i];
    }
    for (int i = 0; i < 3; ++i) w[i] /= sum;
}

}  // namespace uvbody::raster
