"""Angular eigenvalues against alpha: alpha^4 |lambda_n + n^2 + n^2/(2 alpha^2)| stays bounded."""
from hrcmc import verify

rows = verify.sweep("alpha", [2.0, 4.0, 8.0, 16.0, 32.0], "spectral")
print(verify.rows_to_csv(rows))
