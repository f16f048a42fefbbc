#include "uvbody/body_model.hpp"

#include <cmath>

namespace uvbody {

namespace {

// SMPL-style 24-joint hierarchy.
constexpr std::array<int, kNumJoints> kParent = {
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

constexpr const char* kJointNames[kNumJoints] = {
    "pelvis",      "left_hip",      "right_hip",      "spine1",      "left_knee",
    "right_knee",  "spine2",        "left_ankle",     "right_ankle", "spine3",
    "left_foot",   "right_foot",    "neck",           "left_collar", "right_collar",
    "head",        "left_shoulder", "right_shoulder", "left_elbow",  "right_elbow",
    "left_wrist",  "right_wrist",   "left_hand",      "right_hand"};

// T-pose joint sites, meters, pelvis at origin, y up, left is +x.
constexpr double kRestJoints[kNumJoints][3] = {
    {0.0, 0.0, 0.0},       // pelvis
    {0.09, -0.06, 0.0},    // left_hip
    {-0.09, -0.06, 0.0},   // right_hip
    {0.0, 0.11, 0.0},      // spine1
    {0.10, -0.45, 0.0},    // left_knee
    {-0.10, -0.45, 0.0},   // right_knee
    {0.0, 0.24, 0.0},      // spine2
    {0.105, -0.85, 0.0},   // left_ankle
    {-0.105, -0.85, 0.0},  // right_ankle
    {0.0, 0.30, 0.0},      // spine3
    {0.11, -0.93, 0.12},   // left_foot
    {-0.11, -0.93, 0.12},  // right_foot
    {0.0, 0.42, 0.0},      // neck
    {0.06, 0.36, 0.0},     // left_collar
    {-0.06, 0.36, 0.0},    // right_collar
    {0.0, 0.54, 0.0},      // head
    {0.17, 0.39, 0.0},     // left_shoulder
    {-0.17, 0.39, 0.0},    // right_shoulder
    {0.43, 0.39, 0.0},     // left_elbow
    {-0.43, 0.39, 0.0},    // right_elbow
    {0.68, 0.39, 0.0},     // left_wrist
    {-0.68, 0.39, 0.0},    // right_wrist
    {0.76, 0.39, 0.0},     // left_hand
    {-0.76, 0.39, 0.0}};   // right_hand

// Capsule radius per bone, indexed by child joint.
constexpr double kBoneRadius[kNumJoints] = {
    0.0,   0.07,  0.07,  0.10,  0.065, 0.065, 0.105, 0.05,  0.05,  0.10,  0.04,  0.04,
    0.045, 0.045, 0.045, 0.08,  0.045, 0.045, 0.042, 0.042, 0.035, 0.035, 0.03,  0.03};

constexpr int kCapRings = 2;  // rings per hemispherical cap, equator included
constexpr int kMidRings = 1;
constexpr int kBoneCount = kNumJoints - 1;

bool is_midline_joint(int j) { return kJointMirror[j] == j; }

// Per-blendshape anisotropic scale applied about each bone's parent joint and
// chained down the tree so segments stay attached. Mirror bone pairs always
// share a group, which keeps every shape direction bilaterally symmetric.
struct ShapeBasis {
    std::array<bool, kNumJoints> bones{};  // indexed by child joint
    Vec3 scale;
};

std::array<ShapeBasis, kShapeDim> shape_bases() {
    auto all = []() {
        std::array<bool, kNumJoints> b{};
        for (int k = 1; k < kNumJoints; ++k) b[k] = true;
        return b;
    };
    auto pick = [](std::initializer_list<int> js) {
        std::array<bool, kNumJoints> b{};
        for (int k : js) b[k] = true;
        return b;
    };
    std::array<ShapeBasis, kShapeDim> bases;
    bases[0] = {all(), Vec3(0.05, 0.05, 0.05)};                            // overall size
    bases[1] = {pick({1, 2, 4, 5, 7, 8, 10, 11}), Vec3(0.0, 0.08, 0.0)};   // leg length
    bases[2] = {pick({3, 6, 9, 12}), Vec3(0.0, 0.06, 0.0)};                // torso length
    bases[3] = {pick({13, 14, 16, 17, 18, 19, 20, 21, 22, 23}), Vec3(0.07, 0.0, 0.0)};  // arm length
    bases[4] = {all(), Vec3(0.05, 0.0, 0.0)};                              // width
    bases[5] = {all(), Vec3(0.0, 0.0, 0.05)};                              // depth
    bases[6] = {pick({12, 15}), Vec3(0.04, 0.04, 0.04)};                   // head size
    bases[7] = {pick({4, 5, 7, 8, 10, 11}), Vec3(0.04, 0.0, 0.04)};        // leg girth
    bases[8] = {pick({16, 17, 18, 19, 20, 21, 22, 23}), Vec3(0.0, 0.03, 0.03)};  // arm girth
    bases[9] = {pick({3, 6, 9}), Vec3(0.05, 0.0, 0.05)};                   // torso girth
    return bases;
}

struct CapsuleFrame {
    Vec3 p0, p1, axis, u, v;
    double length;
};

CapsuleFrame bone_frame(int bone) {
    CapsuleFrame f;
    int p = kParent[bone];
    f.p0 = Vec3(kRestJoints[p][0], kRestJoints[p][1], kRestJoints[p][2]);
    f.p1 = Vec3(kRestJoints[bone][0], kRestJoints[bone][1], kRestJoints[bone][2]);
    f.length = (f.p1 - f.p0).norm();
    f.axis = (f.p1 - f.p0) / f.length;
    if (is_midline_joint(bone)) {
        // midline bones lie in the x = 0 plane; a pure-x first frame vector
        // keeps their rings exactly mirrorable about that plane
        f.u = Vec3(1.0, 0.0, 0.0);
    } else if (std::abs(f.axis.dot(Vec3(0.0, 1.0, 0.0))) < 0.99) {
        f.u = f.axis.cross(Vec3(0.0, 1.0, 0.0)).normalized();
    } else {
        f.u = f.axis.cross(Vec3(0.0, 0.0, 1.0)).normalized();
    }
    f.v = f.axis.cross(f.u);
    return f;
}

struct RingSpec {
    Vec3 center;
    double radius;
    double axial;  // along-bone parameter, 0 at parent joint, 1 at child joint
};

std::vector<RingSpec> capsule_rings(const CapsuleFrame& f, double r) {
    std::vector<RingSpec> rings;
    for (int ci = 0; ci < kCapRings; ++ci) {  // bottom cap up to the parent-end equator
        double a = 0.5 * M_PI * (ci + 1) / kCapRings;
        rings.push_back({f.p0 - r * std::cos(a) * f.axis, r * std::sin(a), -r * std::cos(a) / f.length});
    }
    for (int mi = 0; mi < kMidRings; ++mi) {
        double t = (mi + 1) / static_cast<double>(kMidRings + 1);
        rings.push_back({f.p0 + t * f.length * f.axis, r, t});
    }
    rings.push_back({f.p1, r, 1.0});  // child-end equator
    for (int ci = 0; ci < kCapRings - 1; ++ci) {
        double a = 0.5 * M_PI * (kCapRings - 1 - ci) / kCapRings;
        rings.push_back({f.p1 + r * std::cos(a) * f.axis, r * std::sin(a), 1.0 + r * std::cos(a) / f.length});
    }
    return rings;
}

// Blend toward the bone joint over the outer stretch of the bone; the cap
// past the child end stays at an even split. Constant on each ring, so every
// full ring transforms to an exact rigid blend of its two joints.
double child_weight(double axial) {
    return 0.5 * std::clamp((axial - 0.6) / 0.4, 0.0, 1.0);
}

struct Builder {
    int S = 0;  // ring segment count, even
    int R = 2 * kCapRings + kMidRings;
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tri;
    std::vector<std::array<double, 6>> tri_local;  // (cu, rv) per corner
    std::vector<int> tri_segment;
    std::vector<int> mirror;
    std::vector<SegmentLayout> segments;

    int parent_equator_ring() const { return kCapRings - 1; }
    int child_equator_ring() const { return kCapRings + kMidRings; }

    void add_face(int seg, std::array<int, 3> vs, std::array<double, 6> local) {
        tri.push_back(vs);
        tri_local.push_back(local);
        tri_segment.push_back(seg);
    }

    // Strip quads use a column-symmetric diagonal pattern: the face set of
    // columns j >= S/2 is the exact unwrap mirror of columns S-1-j. Together
    // with integer-aligned corner placement this makes rasterized coverage
    // reflect bitwise across the island midline.
    int build_capsule(int bone) {
        const CapsuleFrame f = bone_frame(bone);
        const double r = kBoneRadius[bone];
        const auto rings = capsule_rings(f, r);

        SegmentLayout seg;
        seg.bone = bone;
        seg.parent_joint = kParent[bone];
        seg.midline = is_midline_joint(bone);
        seg.mirror_segment = static_cast<int>(segments.size());  // patched for pairs
        seg.radius = r;
        seg.vertex_start = static_cast<int>(verts.size());
        seg.ring_count = R;
        seg.segments_in_ring = S;
        for (const auto& ring : rings) seg.ring_axial.push_back(ring.axial);
        seg.face_start = static_cast<int>(tri.size());
        const int id = static_cast<int>(segments.size());

        verts.push_back(f.p0 - r * f.axis);  // bottom pole
        for (const auto& ring : rings) {
            size_t ring_base = verts.size();
            for (int j = 0; j < S; ++j) {
                if (seg.midline && j > S / 2) {
                    // bitwise mirror of the partner column
                    const Vec3& m = verts[ring_base + (S - j)];
                    verts.push_back(Vec3(-m.x(), m.y(), m.z()));
                    continue;
                }
                double phi = 2.0 * M_PI * j / S - 0.5 * M_PI;
                double cx = std::cos(phi);
                if (seg.midline && (j == 0 || j == S / 2)) cx = 0.0;  // exact midplane
                verts.push_back(ring.center + ring.radius * (cx * f.u + std::sin(phi) * f.v));
            }
        }
        verts.push_back(f.p1 + r * f.axis);  // top pole

        auto ring_v = [&](int ring, int col) { return seg.ring_vertex(ring, col % S); };
        const int bp = seg.bottom_pole();
        const int tp = seg.vertex_start + 1 + R * S;

        for (int j = 0; j < S; ++j)  // bottom fan, outward winding
            add_face(id, {bp, ring_v(0, j + 1), ring_v(0, j)},
                     {j + 0.5, 0.0, j + 1.0, 1.0, static_cast<double>(j), 1.0});
        for (int i = 0; i + 1 < R; ++i) {
            double rv0 = i + 1.0, rv1 = i + 2.0;
            for (int j = 0; j < S; ++j) {
                int a = ring_v(i, j), bb = ring_v(i, j + 1), c = ring_v(i + 1, j + 1), d = ring_v(i + 1, j);
                double cu0 = j, cu1 = j + 1.0;
                if (j < S / 2) {
                    add_face(id, {a, bb, c}, {cu0, rv0, cu1, rv0, cu1, rv1});
                    add_face(id, {a, c, d}, {cu0, rv0, cu1, rv1, cu0, rv1});
                } else {
                    add_face(id, {a, bb, d}, {cu0, rv0, cu1, rv0, cu0, rv1});
                    add_face(id, {bb, c, d}, {cu1, rv0, cu1, rv1, cu0, rv1});
                }
            }
        }
        double rvt = R + 1.0;
        for (int j = 0; j < S; ++j)  // top fan
            add_face(id, {tp, ring_v(R - 1, j), ring_v(R - 1, j + 1)},
                     {j + 0.5, rvt, static_cast<double>(j), static_cast<double>(R), j + 1.0, static_cast<double>(R)});

        seg.face_count = static_cast<int>(tri.size()) - seg.face_start;
        segments.push_back(seg);

        mirror.resize(verts.size(), -1);
        if (seg.midline) {
            mirror[bp] = bp;
            mirror[tp] = tp;
            for (int i = 0; i < R; ++i)
                for (int j = 0; j < S; ++j) mirror[ring_v(i, j)] = ring_v(i, (S - j) % S);
        }
        return id;
    }

    // Exact x-negated copy of a previously built capsule.
    int build_mirror_capsule(int bone, int src_id) {
        const SegmentLayout& src = segments[src_id];
        SegmentLayout seg = src;
        seg.bone = bone;
        seg.parent_joint = kParent[bone];
        seg.mirror_segment = src_id;
        seg.vertex_start = static_cast<int>(verts.size());
        seg.face_start = static_cast<int>(tri.size());
        const int id = static_cast<int>(segments.size());
        const int capsule_verts = 2 + R * S;

        for (int i = 0; i < capsule_verts; ++i) {
            Vec3 v = verts[src.vertex_start + i];
            verts.push_back(Vec3(-v.x(), v.y(), v.z()));
        }
        const int offset = seg.vertex_start - src.vertex_start;
        for (int fi = src.face_start; fi < src.face_start + src.face_count; ++fi) {
            const auto& t = tri[fi];
            const auto& l = tri_local[fi];
            // swap two corners to restore outward winding after the reflection
            add_face(id, {t[0] + offset, t[2] + offset, t[1] + offset},
                     {S - l[0], l[1], S - l[4], l[5], S - l[2], l[3]});
        }
        seg.face_count = static_cast<int>(tri.size()) - seg.face_start;
        segments.push_back(seg);

        mirror.resize(verts.size(), -1);
        for (int i = 0; i < capsule_verts; ++i) {
            mirror[src.vertex_start + i] = seg.vertex_start + i;
            mirror[seg.vertex_start + i] = src.vertex_start + i;
        }
        return id;
    }
};

}  // namespace

const std::array<int, kNumJoints> kJointMirror = {0,  2,  1,  3,  5,  4,  6,  8,  7,  9,  11, 10,
                                                  12, 14, 13, 15, 17, 16, 19, 18, 21, 20, 23, 22};

// LSP order: R ankle, R knee, R hip, L hip, L knee, L ankle,
//            R wrist, R elbow, R shoulder, L shoulder, L elbow, L wrist,
//            neck, head top.
const std::array<int, kNumParts> kPartMirror = {5, 4, 3, 2, 1, 0, 11, 10, 9, 8, 7, 6, 12, 13};

void KinematicTree::validate() const {
    if (parent[0] != -1) throw std::invalid_argument("kinematic tree: joint 0 must be the root");
    for (int i = 1; i < kNumJoints; ++i)
        if (parent[i] < 0 || parent[i] >= i)
            throw std::invalid_argument("kinematic tree: parents must be topologically ordered");
}

void PoseParams::validate() const {
    if (!theta.allFinite()) throw std::invalid_argument("pose: non-finite axis-angle");
    for (int k = 0; k < kNumJoints; ++k)
        if (theta.row(k).norm() >= M_PI)
            throw std::invalid_argument("pose: axis-angle magnitude must be < pi (canonical form)");
}

void ShapeParams::validate() const {
    if (!beta.allFinite()) throw std::invalid_argument("shape: non-finite coefficients");
    for (int i = 0; i < kShapeDim; ++i)
        if (std::abs(beta[i]) > 5.0)
            throw std::invalid_argument("shape: |beta| must be <= 5");
}

JointSet JointSet::all_visible(const MatX& j) {
    if (j.rows() != kNumParts || j.cols() != 3)
        throw std::invalid_argument("JointSet: expected 14 x 3 joints");
    JointSet s;
    s.joints = j;
    s.visible.fill(true);
    return s;
}

void JointSet::apply_visibility() {
    for (int k = 0; k < kNumParts; ++k)
        if (!visible[k]) joints.row(k).setZero();
}

int JointSet::visible_count() const {
    int n = 0;
    for (bool v : visible) n += v;
    return n;
}

Mat3 rodrigues(const Vec3& axis_angle) {
    if (!axis_angle.allFinite()) throw std::invalid_argument("rodrigues: non-finite input");
    double angle = axis_angle.norm();
    if (angle < 1e-12) return Mat3::Identity();
    Vec3 k = axis_angle / angle;
    Mat3 kx;
    kx << 0.0, -k.z(), k.y(), k.z(), 0.0, -k.x(), -k.y(), k.x(), 0.0;
    return Mat3::Identity() + std::sin(angle) * kx + (1.0 - std::cos(angle)) * (kx * kx);
}

Vec3 canonicalize_axis_angle(const Vec3& axis_angle) {
    double angle = axis_angle.norm();
    if (angle < M_PI) return axis_angle;
    double wrapped = std::remainder(angle, 2.0 * M_PI);  // (-pi, pi]
    if (std::abs(wrapped) >= M_PI) wrapped = std::copysign(M_PI - 1e-12, wrapped);
    return axis_angle * (wrapped / angle);
}

BodyModel build_synthetic_model(const ModelConfig& config) {
    if (config.vertex_budget < 500)
        throw std::invalid_argument("model config: vertex budget must be >= 500");

    const int rings_per_capsule = 2 * kCapRings + kMidRings;
    int S = (config.vertex_budget / kBoneCount - 2) / rings_per_capsule;
    S -= S % 2;
    S = std::max(S, 4);

    Builder b;
    b.S = S;
    std::array<int, kNumJoints> capsule_of_bone;
    capsule_of_bone.fill(-1);
    for (int k = 1; k < kNumJoints; ++k) {
        if (capsule_of_bone[k] >= 0) continue;
        int id = b.build_capsule(k);
        capsule_of_bone[k] = id;
        int km = kJointMirror[k];
        if (km != k) {
            capsule_of_bone[km] = b.build_mirror_capsule(km, id);
            b.segments[id].mirror_segment = capsule_of_bone[km];
        }
    }

    BodyModel model;
    for (int i = 0; i < kNumJoints; ++i) {
        model.tree.parent[i] = kParent[i];
        model.tree.names[i] = kJointNames[i];
    }

    const int N = static_cast<int>(b.verts.size());
    const int F = static_cast<int>(b.tri.size());
    model.template_vertices.resize(N, 3);
    for (int i = 0; i < N; ++i) model.template_vertices.row(i) = b.verts[i].transpose();
    model.faces.resize(F, 3);
    model.face_corner_local.resize(F, 6);
    for (int f = 0; f < F; ++f) {
        for (int c = 0; c < 3; ++c) model.faces(f, c) = b.tri[f][c];
        for (int c = 0; c < 6; ++c) model.face_corner_local(f, c) = b.tri_local[f][c];
    }
    model.face_segment = b.tri_segment;
    model.mirror_vertex = b.mirror;
    model.segments = b.segments;
    model.ring_segments = S;
    model.rows_per_island = rings_per_capsule + 1;

    // skin weights: per-ring blend between the bone's parent joint and the bone joint
    model.skin_weights = MatX::Zero(N, kNumJoints);
    for (const auto& seg : model.segments) {
        auto assign = [&](int vidx, double axial) {
            double wc = child_weight(axial);
            model.skin_weights(vidx, seg.parent_joint) = 1.0 - wc;
            if (wc > 0.0) model.skin_weights(vidx, seg.bone) = wc;
        };
        assign(seg.bottom_pole(), seg.ring_axial.front());
        assign(seg.top_pole(), seg.ring_axial.back());
        for (int i = 0; i < seg.ring_count; ++i)
            for (int j = 0; j < S; ++j) assign(seg.ring_vertex(i, j), seg.ring_axial[i]);
    }

    // ring-averaged joint regressors; a full ring averages exactly to the ring
    // center, which sits on the bone axis at the joint
    const int child_eq = b.child_equator_ring();
    const int parent_eq = b.parent_equator_ring();
    model.kin_regressor = MatX::Zero(kNumJoints, N);
    for (int k = 1; k < kNumJoints; ++k) {
        const auto& seg = model.segments[capsule_of_bone[k]];
        for (int j = 0; j < S; ++j) model.kin_regressor(k, seg.ring_vertex(child_eq, j)) = 1.0 / S;
    }
    {
        const auto& seg = model.segments[capsule_of_bone[3]];  // pelvis->spine1
        for (int j = 0; j < S; ++j) model.kin_regressor(0, seg.ring_vertex(parent_eq, j)) = 1.0 / S;
    }

    // sparse sites: ring at the named joint of the capsule that ends there
    const int kLspBone[kNumParts] = {8, 5, 2, 1, 4, 7, 21, 19, 17, 16, 18, 20, 12, 15};
    model.lsp_regressor = MatX::Zero(kNumParts, N);
    for (int p = 0; p < kNumParts; ++p) {
        const auto& seg = model.segments[capsule_of_bone[kLspBone[p]]];
        if (p == 13) {
            model.lsp_regressor(p, seg.top_pole()) = 1.0;  // head top
        } else {
            for (int j = 0; j < S; ++j) model.lsp_regressor(p, seg.ring_vertex(child_eq, j)) = 1.0 / S;
        }
    }

    // chained per-segment scale offsets
    const auto bases = shape_bases();
    MatX rest(kNumJoints, 3);
    for (int k = 0; k < kNumJoints; ++k)
        rest.row(k) = Eigen::RowVector3d(kRestJoints[k][0], kRestJoints[k][1], kRestJoints[k][2]);
    for (int bidx = 0; bidx < kShapeDim; ++bidx) {
        const auto& basis = bases[bidx];
        MatX joint_offset = MatX::Zero(kNumJoints, 3);
        for (int k = 1; k < kNumJoints; ++k) {
            Eigen::RowVector3d off = Eigen::RowVector3d::Zero();
            if (basis.bones[k]) {
                Eigen::RowVector3d bone_vec = rest.row(k) - rest.row(kParent[k]);
                off = Eigen::RowVector3d(basis.scale.x() * bone_vec.x(), basis.scale.y() * bone_vec.y(),
                                         basis.scale.z() * bone_vec.z());
            }
            joint_offset.row(k) = joint_offset.row(kParent[k]) + off;
        }
        MatX dirs = MatX::Zero(N, 3);
        for (const auto& seg : model.segments) {
            Eigen::RowVector3d pj = rest.row(seg.parent_joint);
            Eigen::RowVector3d base = joint_offset.row(seg.parent_joint);
            Vec3 s = basis.bones[seg.bone] ? basis.scale : Vec3::Zero();
            auto apply = [&](int vidx) {
                Eigen::RowVector3d rel = model.template_vertices.row(vidx) - pj;
                dirs.row(vidx) = base + Eigen::RowVector3d(s.x() * rel.x(), s.y() * rel.y(), s.z() * rel.z());
            };
            apply(seg.bottom_pole());
            apply(seg.top_pole());
            for (int i = 0; i < seg.ring_count; ++i)
                for (int j = 0; j < S; ++j) apply(seg.ring_vertex(i, j));
        }
        model.shape_dirs[bidx] = std::move(dirs);
    }

    model.validate();
    return model;
}

void BodyModel::validate() const {
    tree.validate();
    const int N = vertex_count();
    if (N < 500) throw std::logic_error("model: fewer than 500 vertices");
    for (int i = 0; i < N; ++i) {
        double wsum = skin_weights.row(i).sum();
        if (std::abs(wsum - 1.0) > 1e-9 || skin_weights.row(i).minCoeff() < 0.0)
            throw std::logic_error("model: skin weight rows must be a convex combination");
        int m = mirror_vertex[i];
        Vec3 a = template_vertices.row(i);
        Vec3 bm = template_vertices.row(m);
        if (std::abs(a.x() + bm.x()) > 1e-9 || std::abs(a.y() - bm.y()) > 1e-9 ||
            std::abs(a.z() - bm.z()) > 1e-9)
            throw std::logic_error("model: template must be bilaterally symmetric");
    }
    for (int r = 0; r < kin_regressor.rows(); ++r)
        if (std::abs(kin_regressor.row(r).sum() - 1.0) > 1e-9)
            throw std::logic_error("model: kin regressor rows must sum to 1");
    for (int r = 0; r < lsp_regressor.rows(); ++r)
        if (std::abs(lsp_regressor.row(r).sum() - 1.0) > 1e-9)
            throw std::logic_error("model: lsp regressor rows must sum to 1");
}

MatX shaped_rest_joints(const BodyModel& model, const ShapeParams& beta) {
    MatX shaped = model.template_vertices;
    for (int bi = 0; bi < kShapeDim; ++bi)
        if (beta.beta[bi] != 0.0) shaped += beta.beta[bi] * model.shape_dirs[bi];
    return model.kin_regressor * shaped;
}

Mesh skin(const BodyModel& model, const PoseParams& theta, const ShapeParams& beta) {
    theta.validate();
    beta.validate();

    MatX shaped = model.template_vertices;
    for (int bi = 0; bi < kShapeDim; ++bi)
        if (beta.beta[bi] != 0.0) shaped += beta.beta[bi] * model.shape_dirs[bi];
    MatX rest = model.kin_regressor * shaped;  // 24 x 3

    std::array<Mat3, kNumJoints> rot;
    std::array<Vec3, kNumJoints> pos;  // posed joint locations
    rot[0] = rodrigues(theta.theta.row(0));
    pos[0] = rest.row(0);
    for (int k = 1; k < kNumJoints; ++k) {
        int p = model.tree.parent[k];
        rot[k] = rot[p] * rodrigues(theta.theta.row(k));
        pos[k] = rot[p] * (rest.row(k) - rest.row(p)).transpose() + pos[p];
    }

    const int N = model.vertex_count();
    Mesh mesh;
    mesh.vertices.resize(N, 3);
    for (int i = 0; i < N; ++i) {
        Vec3 v = shaped.row(i);
        Vec3 out = Vec3::Zero();
        for (int k = 0; k < kNumJoints; ++k) {
            double w = model.skin_weights(i, k);
            if (w == 0.0) continue;
            out += w * (rot[k] * (v - Vec3(rest.row(k))) + pos[k]);
        }
        mesh.vertices.row(i) = (out - pos[0]).transpose();  // root-relative
    }
    return mesh;
}

MatX regress_joints(const Mesh& mesh, const MatX& regressor) {
    if (regressor.cols() != mesh.vertices.rows())
        throw std::invalid_argument("regress_joints: regressor columns must match vertex count");
    return regressor * mesh.vertices;
}

PoseLimits PoseLimits::scaled(double s) const {
    PoseLimits out;
    out.lo = lo * s;
    out.hi = hi * s;
    return out;
}

void PoseLimits::validate() const {
    for (int k = 0; k < kNumJoints; ++k) {
        double worst = 0.0;
        for (int c = 0; c < 3; ++c) {
            if (lo(k, c) > hi(k, c)) throw std::invalid_argument("pose limits: lo > hi");
            if (lo(k, c) <= -M_PI || hi(k, c) >= M_PI)
                throw std::invalid_argument("pose limits: components must lie inside (-pi, pi)");
            double m = std::max(std::abs(lo(k, c)), std::abs(hi(k, c)));
            worst += m * m;
        }
        if (std::sqrt(worst) >= M_PI)
            throw std::invalid_argument("pose limits: per-joint worst-case magnitude must stay below pi");
    }
}

PoseLimits default_pose_limits() {
    PoseLimits lim;
    auto set = [&](int j, double x, double y, double z) {
        lim.lo.row(j) = Eigen::RowVector3d(-x, -y, -z);
        lim.hi.row(j) = Eigen::RowVector3d(x, y, z);
    };
    set(1, 0.5, 0.3, 0.3);
    set(2, 0.5, 0.3, 0.3);
    for (int j : {3, 6, 9}) set(j, 0.2, 0.2, 0.2);
    for (int j : {4, 5}) {
        lim.lo.row(j) = Eigen::RowVector3d(0.0, -0.1, -0.1);
        lim.hi.row(j) = Eigen::RowVector3d(1.2, 0.1, 0.1);
    }
    for (int j : {7, 8}) set(j, 0.3, 0.2, 0.2);
    for (int j : {10, 11}) set(j, 0.2, 0.1, 0.1);
    set(12, 0.3, 0.3, 0.2);
    set(15, 0.3, 0.3, 0.2);
    for (int j : {13, 14}) set(j, 0.1, 0.1, 0.15);
    for (int j : {16, 17}) set(j, 0.4, 0.6, 0.6);
    for (int j : {18, 19}) set(j, 0.2, 1.0, 0.5);
    for (int j : {20, 21}) set(j, 0.3, 0.3, 0.3);
    for (int j : {22, 23}) set(j, 0.2, 0.2, 0.2);
    return lim;
}

PoseParams sample_pose(uint64_t seed, const PoseLimits& limits) {
    limits.validate();
    Rng rng(seed);
    PoseParams pose;
    for (int k = 0; k < kNumJoints; ++k)
        for (int c = 0; c < 3; ++c) pose.theta(k, c) = rng.uniform(limits.lo(k, c), limits.hi(k, c));
    return pose;
}

}  // namespace uvbody
