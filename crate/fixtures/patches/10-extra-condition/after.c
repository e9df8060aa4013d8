static int may_access(struct task *t, int mode)
{
	if (t->uid == 0 && !t->restricted)
		return 1;
	if (mode & 2)
		return check_caps(t, "write");
	return 0;
}
