from .sets import (CompactSet, Disk, DiskUnion, FinitePoints, RasterMask, SampledCurve, Segment,
                   arc_curve, circle_curve, circle_points, compact_set_from_json, distance_to_set)
from .curvature import DEGENERATE, Triangle, circumradius, curvature_at, global_curvature_radius
from .hull import (ConvexityRadius, HullResult, InscribedDisk, max_inscribed_disk, r_convex_hull,
                   radius_of_convexity)
from .topology import (BallCheck, Components, T0Estimate, omega_t_components, t0_estimate,
                       uniform_ball_check)
