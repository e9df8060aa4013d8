static int users;

int open_dev(struct inode *inode, struct file *file)
{
	users++;
	return 0;
}
