"""Characters of truncated parahoric groups over F_q[t]/t^{r+1}."""
