"""Hand simulation of the 5x5 episode used in mdp_test (EpisodeTrace.HandSimulated).

Map: 5x5 cells of 10 m, outage(row r, col c) = (5r + c) / 24. Start at cell (0, 0),
target at the center of cell (col 3, row 2), reach radius one cell (10 m),
w1 = 1, w2 = 2, p_outbound = 1, p_reach = 100.
Actions: left (blocked), right, right, forward, forward.
"""
import math

outage = lambda c, r: (5 * r + c) / 24
center = lambda c, r: (10 * c + 5.0, 10 * r + 5.0)
target = center(3, 2)
diag = math.hypot(50.0, 50.0)
moves = {"forward": (0, 1), "backward": (0, -1), "left": (-1, 0), "right": (1, 0)}

c, r = 0, 0
for a in ["left", "right", "right", "forward", "forward"]:
    dc, dr = moves[a]
    nc, nr = c + dc, r + dr
    outbound = not (0 <= nc < 5 and 0 <= nr < 5)
    if outbound:
        nc, nr = c, r
    p = center(nc, nr)
    d = math.hypot(p[0] - target[0], p[1] - target[1])
    reached = d <= 10.0
    reward = (-1.0 if outbound else 0.0) - 1.0 * d / diag - 2.0 * outage(nc, nr) + (100.0 if reached else 0.0)
    print(a, (nc, nr), repr(reward), "reached" if reached else "")
    c, r = nc, nr
