static int read_name(struct file *f, char *out)
{
	char name[32];
	int n = kernel_read(f, name, sizeof(name) - 1, 0);

	if (n < 0)
		return n;
	name[n] = 0;
	strcpy(out, name);
	return 0;
}
