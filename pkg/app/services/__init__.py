# Simulation, routing and PSO tuning services